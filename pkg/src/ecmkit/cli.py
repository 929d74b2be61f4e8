"""Command-line front end.

Verbs: model validate|show, predict, probe latency|inst|bw|gather|freq,
sweep, report efficiency|energy|compare, serve.  Commands run in-process by
default; --server URL turns the CLI into a thin client of a running service
instance (the same JSON bodies the service's endpoints accept).

Probe and sweep results are emitted as JSON lines (one record per line) so
runs can be appended to a file and fed back into `report`; --csv flattens
records into a plotting-ready table.  Exit codes: 0 success, 2 validation
error, 3 missing capability, 4 tolerance failure in `report compare`.
"""

import argparse
import json
import sys
from dataclasses import asdict

from . import ops
from .ecm import ecm_notation
from .errors import CapabilityError, EcmkitError
from .machine.loader import SHIPPED_MACHINES
from .results import (
    read_json_lines,
    to_csv,
    to_record_dict,
)
from .units import parse_frequency, parse_size

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPABILITY = 3
EXIT_TOLERANCE = 4


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--machine", "-m", help="shipped machine name "
                        f"({', '.join(SHIPPED_MACHINES)}) or a machine file")
    parser.add_argument("--executor", choices=("synthetic", "real"),
                        default="synthetic")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jitter", type=float, default=0.0,
                        help="synthetic noise level, fraction in [0, 0.2]")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON lines (default)")
    fmt.add_argument("--csv", action="store_true", help="flat CSV table")
    parser.add_argument("--server", help="base URL of a running service; the "
                        "command executes there instead of in-process")
    parser.add_argument("--output", "-o", help="append records to a file "
                        "instead of stdout")
    parser.add_argument("--base-frequency", default=None,
                        help="host base clock for the real executor, e.g. 2.3GHz")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecmkit",
        description="CPU microarchitecture characterization and analytic "
                    "loop-performance modeling")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_model = sub.add_parser("model", help="machine description files")
    model_sub = p_model.add_subparsers(dest="action", required=True)
    p_show = model_sub.add_parser("show", help="dump a machine description")
    p_show.add_argument("name", help="shipped machine name or file path")
    p_show.add_argument("--lenient", action="store_true",
                        help="accept unknown keys")
    _common_flags(p_show)
    p_val = model_sub.add_parser("validate", help="check a machine file")
    p_val.add_argument("file")
    p_val.add_argument("--lenient", action="store_true")
    _common_flags(p_val)

    p_pred = sub.add_parser("predict", help="model a kernel on a machine")
    p_pred.add_argument("kernel", help="builtin kernel name or kernel file")
    p_pred.add_argument("--width", default="avx", choices=("scalar", "sse", "avx"))
    p_pred.add_argument("--ws", default="8kB", help="working-set size (e.g. 10kB, 1GB)")
    p_pred.add_argument("--cores", type=int, default=1)
    p_pred.add_argument("--policy", choices=("none", "full"), default="none")
    p_pred.add_argument("--frequency", help="stated core clock (default: base)")
    p_pred.add_argument("--snoop-mode", dest="snoop_mode")
    p_pred.add_argument("--scaling", action="store_true",
                        help="include the bandwidth-vs-cores table")
    p_pred.add_argument("--ecm-notation", action="store_true",
                        help="print the braced cycle-decomposition string")
    p_pred.add_argument("--export-kernel", metavar="PATH",
                        help="also write the kernel descriptor to a file")
    _common_flags(p_pred)

    p_probe = sub.add_parser("probe", help="run a measurement")
    probe_sub = p_probe.add_subparsers(dest="probe_kind", required=True)

    p_lat = probe_sub.add_parser("latency", help="pointer-chase access latency")
    p_lat.add_argument("--ws", required=True, help="working-set size")
    p_lat.add_argument("--snoop-mode", dest="snoop_mode")
    p_lat.add_argument("--cod", choices=("on", "off"))
    p_lat.add_argument("--reps", type=int, default=21)
    _common_flags(p_lat)

    p_inst = probe_sub.add_parser("inst", help="instruction latency/throughput")
    p_inst.add_argument("mnemonic")
    p_inst.add_argument("--width", default="avx", choices=("scalar", "sse", "avx"))
    p_inst.add_argument("--precision", default="dp", choices=("sp", "dp", "none"))
    p_inst.add_argument("--mode", choices=("latency", "throughput"),
                        default="latency")
    p_inst.add_argument("--chains", type=int, default=8)
    p_inst.add_argument("--reps", type=int, default=21)
    _common_flags(p_inst)

    p_bw = probe_sub.add_parser("bw", help="streaming bandwidth")
    p_bw.add_argument("kernel")
    p_bw.add_argument("--ws", required=True)
    p_bw.add_argument("--cores", type=int, default=1)
    p_bw.add_argument("--width", default="avx", choices=("scalar", "sse", "avx"))
    p_bw.add_argument("--snoop-mode", dest="snoop_mode")
    p_bw.add_argument("--cod", choices=("on", "off"))
    p_bw.add_argument("--reps", type=int, default=21)
    _common_flags(p_bw)

    p_gather = probe_sub.add_parser("gather", help="gather instruction timing")
    p_gather.add_argument("--level", required=True, help="L1|L2|L3|MEM")
    p_gather.add_argument("--spread", type=int, required=True,
                          choices=(1, 2, 4, 8))
    p_gather.add_argument("--reps", type=int, default=21)
    _common_flags(p_gather)

    p_freq = probe_sub.add_parser("freq", help="observe attained clocks")
    p_freq.add_argument("--class", dest="workload_class", default="avx",
                        choices=("avx", "sse", "scalar", "idle"))
    p_freq.add_argument("--cores", type=int)
    p_freq.add_argument("--duration", type=float, default=0.5)
    p_freq.add_argument("--core-freq", help="requested core clock")
    p_freq.add_argument("--uncore-freq", help="requested uncore clock")
    _common_flags(p_freq)

    p_sweep = sub.add_parser("sweep", help="frequency/core grid sweep")
    p_sweep.add_argument("--workload", required=True,
                         help="builtin kernel, profile (hpcg_like, "
                              "linpack_like), or cmd:<command>")
    p_sweep.add_argument("--core-freqs", help="axis: list '2.3GHz,2.5GHz', "
                         "range '1.2GHz:2.8GHz:0.2GHz', or 'turbo'")
    p_sweep.add_argument("--uncore-freqs", help="axis, same syntax")
    p_sweep.add_argument("--cores", help="list of worker counts, e.g. '1,2,18'")
    p_sweep.add_argument("--ws", help="working set for kernel workloads")
    p_sweep.add_argument("--dwell", type=float, default=0.5,
                         help="seconds per grid point")
    p_sweep.add_argument("--width", default="avx", choices=("scalar", "sse", "avx"))
    p_sweep.add_argument("--snoop-mode", dest="snoop_mode")
    _common_flags(p_sweep)

    p_report = sub.add_parser("report", help="analyze results")
    report_sub = p_report.add_subparsers(dest="report_kind", required=True)

    p_eff = report_sub.add_parser("efficiency", help="scaling efficiency")
    p_eff.add_argument("--series", help="explicit points 'cores:bw,...', "
                       "e.g. '1:10,14:128.8'")
    p_eff.add_argument("--input", help="JSON-lines file of bandwidth probes")
    p_eff.add_argument("--epsilon", type=float, default=0.02)
    _common_flags(p_eff)

    p_energy = report_sub.add_parser("energy", help="performance per watt")
    p_energy.add_argument("--performance", type=float)
    p_energy.add_argument("--unit", default="GFLOP/s")
    p_energy.add_argument("--energy", type=float, help="joules")
    p_energy.add_argument("--duration", type=float, help="seconds")
    p_energy.add_argument("--input", help="JSON-lines file with a sweep result "
                          "(one energy report per point)")
    _common_flags(p_energy)

    p_cmp = report_sub.add_parser("compare", help="measurement vs prediction")
    p_cmp.add_argument("--probe", required=True,
                       help="JSON-lines file holding the probe result")
    p_cmp.add_argument("--prediction", required=True,
                       help="JSON-lines file holding the prediction")
    p_cmp.add_argument("--tolerance", type=float, default=None)
    _common_flags(p_cmp)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _emit(args, records, document: dict | None = None) -> None:
    """Write records (JSON lines / CSV) or a single document."""
    out = sys.stdout
    close = False
    if getattr(args, "output", None):
        out = open(args.output, "a")
        close = True
    try:
        if document is not None:
            if getattr(args, "csv", False):
                out.write(_document_csv(document))
            else:
                indent = None if getattr(args, "json", False) else 2
                out.write(json.dumps(document, indent=indent, sort_keys=True) + "\n")
        elif getattr(args, "csv", False):
            out.write(to_csv(records))
        else:
            for record in records:
                out.write(json.dumps(to_record_dict(record), sort_keys=True) + "\n")
    finally:
        if close:
            out.close()


def _document_csv(document: dict) -> str:
    import csv
    import io

    from .results import flatten_record
    flat = flatten_record(document)
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(flat))
    writer.writeheader()
    writer.writerow(flat)
    return out.getvalue()


def _http_post(args, path: str, body: dict) -> dict:
    import httpx
    response = httpx.post(args.server.rstrip("/") + path, json=body, timeout=300.0)
    if response.status_code >= 400:
        detail = response.json().get("detail", response.text)
        kind = response.json().get("kind", "")
        raise CapabilityError(detail) if kind == "CapabilityError" \
            else SystemExit(_fail(detail))
    return response.json()


def _http_get(args, path: str) -> dict:
    import httpx
    response = httpx.get(args.server.rstrip("/") + path, timeout=60.0)
    if response.status_code >= 400:
        raise SystemExit(_fail(response.json().get("detail", response.text)))
    return response.json()


def _fail(message: str, code: int = EXIT_VALIDATION) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _freq_axis(text: str | None):
    if not text:
        return None
    values = []
    if ":" in text and "," not in text:
        lo, hi, step = (parse_frequency(part) for part in text.split(":"))
        f = lo
        while f <= hi + 1e-6:
            values.append(round(f, 3))
            f += step
        return values
    for part in text.split(","):
        part = part.strip()
        values.append(None if part in ("turbo", "none") else parse_frequency(part))
    return values


def _int_list(text: str | None):
    if not text:
        return None
    return [int(part) for part in text.split(",")]


def _series_pairs(text: str):
    pairs = []
    for part in text.split(","):
        n, bw = part.split(":")
        pairs.append((int(n), float(bw)))
    return pairs


def _cod_flag(value):
    return None if value is None else value == "on"


# -- verb implementations -----------------------------------------------------

def _cmd_model(args) -> int:
    if args.action == "show":
        if args.server:
            doc = _http_get(args, f"/machines/{args.name}")
        else:
            doc = ops.op_model_show(args.name, lenient=args.lenient)
        _emit(args, [], document=doc)
        return EXIT_OK
    if args.server:
        from pathlib import Path
        machine = args.file
        if not machine.lstrip().startswith("{"):
            machine = json.loads(Path(args.file).read_text())
        doc = _http_post(args, "/machines/validate",
                         {"machine": machine, "lenient": args.lenient})
    else:
        doc = ops.op_model_validate(args.file, lenient=args.lenient)
    _emit(args, [], document=doc)
    return EXIT_OK


def _cmd_predict(args) -> int:
    ws = parse_size(args.ws)
    if args.server:
        body = {"machine": args.machine, "kernel": args.kernel,
                "isa_width": args.width, "working_set_bytes": ws,
                "cores": args.cores, "policy": args.policy,
                "snoop_mode": args.snoop_mode, "with_scaling": args.scaling}
        if args.frequency:
            body["frequency_hz"] = parse_frequency(args.frequency)
        doc = _http_post(args, "/predict", body)
        if args.ecm_notation:
            print(doc["notation"])
        else:
            _emit(args, [], document=doc)
        return EXIT_OK
    if not args.machine:
        return _fail("predict needs --machine")
    pred, scaling = ops.op_predict(
        machine=args.machine, kernel=args.kernel, isa_width=args.width,
        working_set_bytes=ws, cores=args.cores, policy=args.policy,
        frequency_hz=parse_frequency(args.frequency) if args.frequency else None,
        snoop_mode=args.snoop_mode, with_scaling=args.scaling)
    if args.export_kernel:
        with open(args.export_kernel, "w") as f:
            json.dump(ops.op_export_kernel(args.kernel, args.width), f, indent=2)
    if args.ecm_notation:
        print(ecm_notation(pred))
        return EXIT_OK
    doc = to_record_dict(pred)
    if scaling:
        doc["scaling"] = scaling
    if getattr(args, "csv", False):
        _emit(args, [pred])
    else:
        _emit(args, [], document=doc)
    return EXIT_OK


def _cmd_probe(args) -> int:
    kind = args.probe_kind
    if kind == "freq":
        body = {"machine": args.machine, "executor": args.executor,
                "workload_class": args.workload_class, "cores": args.cores,
                "duration_s": args.duration,
                "core_freq_hz": parse_frequency(args.core_freq)
                if args.core_freq else None,
                "uncore_freq_hz": parse_frequency(args.uncore_freq)
                if args.uncore_freq else None}
        if args.server:
            doc = _http_post(args, "/probe/frequency", body)
        else:
            doc = ops.op_observe_frequency(
                machine=args.machine, executor=args.executor,
                workload_class=args.workload_class, cores=args.cores,
                duration_s=args.duration,
                core_freq_hz=body["core_freq_hz"],
                uncore_freq_hz=body["uncore_freq_hz"],
                base_frequency_hz=parse_frequency(args.base_frequency)
                if args.base_frequency else None)
        _emit(args, [], document=doc)
        return EXIT_OK

    common = {"machine": args.machine, "executor": args.executor,
              "seed": args.seed, "jitter": args.jitter,
              "repetitions": args.reps}
    base_freq = parse_frequency(args.base_frequency) if args.base_frequency else None
    if kind == "latency":
        body = {**common, "working_set_bytes": parse_size(args.ws),
                "snoop_mode": args.snoop_mode, "cod": _cod_flag(args.cod)}
        if args.server:
            return _emit_probe_response(args, "/probe/latency", body)
        result = ops.op_probe_latency(base_frequency_hz=base_freq, **body)
    elif kind == "inst":
        body = {**common, "mnemonic": args.mnemonic, "width": args.width,
                "precision": args.precision, "mode": args.mode,
                "chains": args.chains}
        if args.server:
            return _emit_probe_response(args, "/probe/instruction", body)
        result = ops.op_probe_instruction(base_frequency_hz=base_freq, **body)
    elif kind == "bw":
        body = {**common, "kernel": args.kernel, "isa_width": args.width,
                "working_set_bytes": parse_size(args.ws), "cores": args.cores,
                "snoop_mode": args.snoop_mode, "cod": _cod_flag(args.cod)}
        if args.server:
            return _emit_probe_response(args, "/probe/bandwidth", body)
        result = ops.op_probe_bandwidth(base_frequency_hz=base_freq, **body)
    elif kind == "gather":
        body = {**common, "source_level": args.level, "cl_spread": args.spread}
        if args.server:
            return _emit_probe_response(args, "/probe/gather", body)
        result = ops.op_probe_gather(**body)
    else:
        return _fail(f"unknown probe kind {kind!r}")
    _emit(args, [result])
    return EXIT_OK


def _emit_probe_response(args, path: str, body: dict) -> int:
    doc = _http_post(args, path, body)
    doc["record"] = "probe_result"
    if args.csv:
        from .results import probe_result_from_dict
        _emit(args, [probe_result_from_dict(doc)])
    else:
        _emit(args, [], document=doc)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    body = {"machine": args.machine, "workload": args.workload,
            "core_freqs_hz": _freq_axis(args.core_freqs),
            "uncore_freqs_hz": _freq_axis(args.uncore_freqs),
            "cores": _int_list(args.cores), "dwell_s": args.dwell,
            "executor": args.executor, "seed": args.seed,
            "jitter": args.jitter, "isa_width": args.width,
            "snoop_mode": args.snoop_mode,
            "working_set_bytes": parse_size(args.ws) if args.ws else None}
    if args.server:
        doc = _http_post(args, "/sweep", body)
        doc["record"] = "sweep_result"
        _emit(args, [], document=doc)
        return EXIT_OK
    result = ops.op_sweep(
        base_frequency_hz=parse_frequency(args.base_frequency)
        if args.base_frequency else None, **body)
    _emit(args, [result])
    return EXIT_OK


def _cmd_report(args) -> int:
    kind = args.report_kind
    if kind == "efficiency":
        series = _series_pairs(args.series) if args.series else None
        results = None
        if args.input:
            with open(args.input) as f:
                records = read_json_lines(f)
            from .probes.base import ProbeResult
            results = [r for r in records if isinstance(r, ProbeResult)]
        if args.server:
            body = {"series": series, "epsilon": args.epsilon}
            if results:
                from .results import probe_result_to_dict
                body["results"] = [probe_result_to_dict(r) for r in results]
            doc = _http_post(args, "/report/efficiency", body)
        else:
            report = ops.op_report_efficiency(series, results, args.epsilon)
            doc = asdict(report)
        _emit(args, [], document=doc)
        return EXIT_OK

    if kind == "energy":
        documents = []
        if args.input:
            with open(args.input) as f:
                records = read_json_lines(f)
            from .probes.base import SweepResult
            for record in records:
                if not isinstance(record, SweepResult):
                    continue
                for point in record.points:
                    report = ops.op_report_energy(
                        point.performance, point.unit,
                        point.package_energy_joules, point.duration_s,
                        point.observed_core_freq_hz,
                        point.observed_uncore_freq_hz)
                    documents.append(asdict(report))
        else:
            if args.performance is None or args.energy is None or args.duration is None:
                return _fail("report energy needs --performance, --energy, "
                             "--duration (or --input)")
            if args.server:
                doc = _http_post(args, "/report/energy", {
                    "performance": args.performance, "unit": args.unit,
                    "energy_joules": args.energy, "duration_s": args.duration})
                documents.append(doc)
            else:
                report = ops.op_report_energy(args.performance, args.unit,
                                              args.energy, args.duration)
                documents.append(asdict(report))
        out = sys.stdout if not args.output else open(args.output, "a")
        try:
            for doc in documents:
                out.write(json.dumps(doc, sort_keys=True) + "\n")
        finally:
            if args.output:
                out.close()
        return EXIT_OK

    if kind == "compare":
        with open(args.probe) as f:
            probes = read_json_lines(f)
        with open(args.prediction) as f:
            predictions = read_json_lines(f)
        from .ecm import EcmPrediction
        from .probes.base import ProbeResult
        probe = next(r for r in probes if isinstance(r, ProbeResult))
        prediction = next(r for r in predictions if isinstance(r, EcmPrediction))
        if args.server:
            from .results import prediction_to_dict, probe_result_to_dict
            doc = _http_post(args, "/report/compare", {
                "probe": probe_result_to_dict(probe),
                "prediction": prediction_to_dict(prediction),
                "tolerance": args.tolerance})
        else:
            report = ops.op_report_compare(probe, prediction, args.tolerance)
            doc = asdict(report)
        _emit(args, [], document=doc)
        if doc.get("passed") is False:
            return EXIT_TOLERANCE
        return EXIT_OK
    return _fail(f"unknown report kind {kind!r}")


def _cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("ecmkit.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "model":
            return _cmd_model(args)
        if args.verb == "predict":
            return _cmd_predict(args)
        if args.verb == "probe":
            return _cmd_probe(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        if args.verb == "report":
            return _cmd_report(args)
        if args.verb == "serve":
            return _cmd_serve(args)
        return _fail(f"unknown verb {args.verb!r}")
    except CapabilityError as exc:
        return _fail(str(exc), EXIT_CAPABILITY)
    except EcmkitError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    except FileNotFoundError as exc:
        return _fail(str(exc), EXIT_VALIDATION)


if __name__ == "__main__":
    sys.exit(main())
