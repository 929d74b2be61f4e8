import json

import pytest

from ecmkit.cli import EXIT_CAPABILITY, EXIT_TOLERANCE, EXIT_VALIDATION, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_model_show_bdw(capsys):
    code, out, _ = run_cli(capsys, "model", "show", "bdw")
    assert code == 0
    doc = json.loads(out)
    assert doc["cores"] == 18
    assert doc["info"]["chip_model"] == "E5-2697 v4"
    assert doc["frequency"]["avx_base_hz"] == 2.0e9


def test_model_validate_good_file(tmp_path, capsys):
    from ecmkit import load_machine, serialize_machine
    path = tmp_path / "m.json"
    path.write_text(json.dumps(serialize_machine(load_machine("snb"))))
    code, out, _ = run_cli(capsys, "model", "validate", str(path))
    assert code == 0
    assert json.loads(out)["valid"] is True


def test_model_validate_bad_file_exit_2(tmp_path, capsys):
    doc = {"name": "broken"}
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, "model", "validate", str(path))
    assert code == EXIT_VALIDATION
    assert "missing required key" in err


def test_model_validate_invariant_names_field(tmp_path, capsys):
    from ecmkit import load_machine, serialize_machine
    doc = serialize_machine(load_machine("bdw"))
    doc["caches"][0]["capacity_bytes"] = 100
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, "model", "validate", str(path))
    assert code == EXIT_VALIDATION
    assert "capacity_bytes" in err


def test_predict_json_record(capsys):
    code, out, _ = run_cli(capsys, "predict", "triad", "-m", "bdw", "--ws", "8kB")
    assert code == 0
    doc = json.loads(out)
    assert doc["record"] == "ecm_prediction"
    assert doc["predicted_bandwidth_bytes_per_cycle"] == pytest.approx(64.0)


def test_predict_ecm_notation(capsys):
    code, out, _ = run_cli(capsys, "predict", "triad", "-m", "bdw",
                           "--ws", "1GB", "--ecm-notation")
    assert code == 0
    assert out.strip().startswith("{")
    assert "∥" in out


def test_predict_with_scaling(capsys):
    code, out, _ = run_cli(capsys, "predict", "triad", "-m", "bdw",
                           "--ws", "1GB", "--scaling")
    doc = json.loads(out)
    assert doc["scaling"]["n_saturation"] >= 1
    assert len(doc["scaling"]["points"]) == 18


def test_predict_export_kernel(tmp_path, capsys):
    path = tmp_path / "triad.json"
    code, _, _ = run_cli(capsys, "predict", "triad", "-m", "bdw",
                         "--export-kernel", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["kernel"]["name"] == "triad"


def test_probe_latency_json_line(capsys):
    code, out, _ = run_cli(capsys, "probe", "latency", "--ws", "10kB",
                           "-m", "bdw", "--snoop-mode", "DIR")
    assert code == 0
    doc = json.loads(out.strip())
    assert doc["record"] == "probe_result"
    assert doc["value"] == 4.0


def test_probe_inst(capsys):
    code, out, _ = run_cli(capsys, "probe", "inst", "div", "--width", "avx",
                           "--precision", "dp", "-m", "bdw")
    doc = json.loads(out)
    assert doc["value"] == 24.0


def test_probe_bw_csv(capsys):
    code, out, _ = run_cli(capsys, "probe", "bw", "triad", "--ws", "10kB",
                           "-m", "bdw", "--csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert "value" in header.split(",")


def test_probe_gather(capsys):
    code, out, _ = run_cli(capsys, "probe", "gather", "--level", "MEM",
                           "--spread", "8", "-m", "hsw")
    assert json.loads(out)["value"] == 89.3


def test_probe_freq_synthetic(capsys):
    code, out, _ = run_cli(capsys, "probe", "freq", "-m", "bdw", "--class", "avx")
    doc = json.loads(out)
    assert doc["core_hz"][0] >= 2.3e9


def test_probe_unknown_machine_exit_2(capsys):
    code, _, err = run_cli(capsys, "probe", "latency", "--ws", "10kB",
                           "-m", "atom")
    assert code == EXIT_VALIDATION


def test_probe_gather_real_executor_exit_3(capsys):
    code, _, err = run_cli(capsys, "probe", "gather", "--level", "L1",
                           "--spread", "1", "-m", "bdw", "--executor", "real")
    assert code == EXIT_CAPABILITY


def test_sweep_and_energy_report(tmp_path, capsys):
    out_file = tmp_path / "sweep.jsonl"
    code, _, _ = run_cli(capsys, "sweep", "--workload", "hpcg_like", "-m", "hsw",
                         "--uncore-freqs", "1.2GHz:2.8GHz:0.2GHz",
                         "--cores", "14", "-o", str(out_file))
    assert code == 0
    code, out, _ = run_cli(capsys, "report", "energy", "--input", str(out_file))
    assert code == 0
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert len(lines) == 9
    for doc in lines:
        assert doc["efficiency_per_watt"] == pytest.approx(
            doc["performance"] / doc["package_power_watts"])


def test_report_efficiency_series(capsys):
    code, out, _ = run_cli(capsys, "report", "efficiency",
                           "--series", "1:10,14:128.8")
    assert code == 0
    assert json.loads(out)["parallel_efficiency"] == pytest.approx(0.92)


def test_report_efficiency_from_probe_file(tmp_path, capsys):
    out_file = tmp_path / "bw.jsonl"
    for n in (1, 2, 4, 8, 14):
        run_cli(capsys, "probe", "bw", "triad", "--ws", "8MB", "-m", "hsw",
                "--cod", "on", "--cores", str(n), "-o", str(out_file))
    code, out, _ = run_cli(capsys, "report", "efficiency",
                           "--input", str(out_file))
    assert code == 0
    assert json.loads(out)["parallel_efficiency"] == pytest.approx(0.98, abs=0.005)


def test_report_compare_pass_and_fail(tmp_path, capsys):
    probe_file = tmp_path / "probe.jsonl"
    pred_file = tmp_path / "pred.jsonl"
    run_cli(capsys, "probe", "bw", "dot", "--ws", "100kB", "-m", "bdw",
            "-o", str(probe_file))
    code, out, _ = run_cli(capsys, "predict", "dot", "-m", "bdw", "--ws",
                           "100kB", "--json")
    pred_file.write_text(out)
    code, out, _ = run_cli(capsys, "report", "compare", "--probe",
                           str(probe_file), "--prediction", str(pred_file),
                           "--tolerance", "0.01")
    assert code == 0
    assert json.loads(out)["passed"] is True

    # an in-L1 prediction against the in-L2 measurement misses the tolerance
    code, out, _ = run_cli(capsys, "predict", "dot", "-m", "bdw", "--ws",
                           "8kB", "--json")
    pred_file.write_text(out)
    code, out, _ = run_cli(capsys, "report", "compare", "--probe",
                           str(probe_file), "--prediction", str(pred_file),
                           "--tolerance", "0.01")
    assert code == EXIT_TOLERANCE
    assert json.loads(out)["passed"] is False


def test_probe_accepts_machine_file_path(tmp_path, capsys):
    from ecmkit import load_machine, serialize_machine
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(serialize_machine(load_machine("hsw"))))
    code, out, _ = run_cli(capsys, "probe", "latency", "--ws", "10kB",
                           "-m", str(path))
    assert code == 0
    assert json.loads(out)["value"] == 4.0


def test_report_csv_and_json_agree(capsys):
    import csv
    import io
    code, json_out, _ = run_cli(capsys, "report", "efficiency",
                                "--series", "1:10,14:128.8")
    code, csv_out, _ = run_cli(capsys, "report", "efficiency",
                               "--series", "1:10,14:128.8", "--csv")
    assert code == 0
    doc = json.loads(json_out)
    row = next(csv.DictReader(io.StringIO(csv_out)))
    assert float(row["parallel_efficiency"]) == doc["parallel_efficiency"]
    assert int(row["saturation_core_count"]) == doc["saturation_core_count"]
    assert json.loads(row["per_point_efficiency"]) == [
        list(p) for p in doc["per_point_efficiency"]]


def test_output_file_appends_json_lines(tmp_path, capsys):
    out_file = tmp_path / "probes.jsonl"
    for ws in ("10kB", "100kB"):
        code, _, _ = run_cli(capsys, "probe", "latency", "--ws", ws, "-m", "bdw",
                             "-o", str(out_file))
        assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert [json.loads(l)["value"] for l in lines] == [4.0, 12.0]
