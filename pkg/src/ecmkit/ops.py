"""Operation layer shared by the CLI and the HTTP service.

Each function takes plain parameters, runs the underlying model or probe,
and returns result objects (or plain dicts for document-style responses).
Errors surface as the toolkit's exception types; the callers map them to
exit codes or HTTP statuses.
"""

from .analysis import (
    DeviationReport,
    EfficiencyReport,
    EnergyReport,
    ScalingSeries,
    compare_prediction,
    efficiency_report,
    energy_metrics,
)
from .ecm import EcmPrediction, predict, scaling_prediction
from .errors import CapabilityError, InvariantError
from .kernels import builtin_kernel, kernel_to_dict, load_kernel
from .machine.loader import (
    SHIPPED_MACHINES,
    load_machine,
    serialize_machine,
    shipped_machine_info,
)
from .probes.base import DEFAULT_REPETITIONS, NoiseModel, ProbeResult, SweepResult
from .probes.real import RealExecutor
from .probes.sweep import SweepGrid, run_sweep
from .probes.synthetic import SyntheticConfig, SyntheticExecutor
from .probes.workloads import resolve_workload
from .results import prediction_from_dict, probe_result_from_dict


def op_model_show(machine: str, lenient: bool = False) -> dict:
    md = load_machine(machine, lenient=lenient)
    doc = serialize_machine(md)
    if isinstance(machine, str) and machine in SHIPPED_MACHINES:
        info = shipped_machine_info(machine)
        if info:
            doc["info"] = info
    return doc


def op_model_validate(machine, lenient: bool = False) -> dict:
    md = load_machine(machine, lenient=lenient)
    return {"valid": True, "machine": md.name, "cores": md.cores,
            "instructions": len(md.instruction_table),
            "cache_levels": md.level_names()}


def op_list_machines() -> list[dict]:
    out = []
    for name in SHIPPED_MACHINES:
        md = load_machine(name)
        info = shipped_machine_info(name)
        out.append({"name": name, "cores": md.cores,
                    "base_hz": md.frequency.base_hz,
                    "microarchitecture": info.get("microarchitecture", ""),
                    "chip_model": info.get("chip_model", "")})
    return out


def op_predict(machine: str, kernel: str, isa_width: str = "avx",
               working_set_bytes: int = 8192, cores: int = 1,
               policy: str = "none", frequency_hz: float | None = None,
               snoop_mode: str | None = None,
               with_scaling: bool = False) -> tuple[EcmPrediction, dict | None]:
    md = load_machine(machine)
    kd = load_kernel(kernel, isa_width)
    pred = predict(kd, working_set_bytes, md, cores=cores, policy=policy,
                   frequency_hz=frequency_hz, snoop_mode=snoop_mode)
    scaling = None
    if with_scaling and pred.memory_bytes_per_iteration > 0:
        sp = scaling_prediction(pred, md)
        scaling = {
            "points": [{"cores": n, "bandwidth_bytes_per_s": bw}
                       for n, bw in sp.points],
            "n_saturation": sp.n_saturation,
            "saturated_bandwidth_bytes_per_s": sp.saturated_bandwidth_bytes_per_s,
        }
    return pred, scaling


def op_export_kernel(kernel: str, isa_width: str = "avx") -> dict:
    return kernel_to_dict(builtin_kernel(kernel, isa_width))


def _executor(kind: str, machine: str | None, seed: int = 0, jitter: float = 0.0,
              snoop_mode: str | None = None, cod: bool | None = None,
              core_freq_hz: float | None = None,
              uncore_freq_hz: float | None = None,
              base_frequency_hz: float | None = None):
    if kind == "synthetic":
        if machine is None:
            raise InvariantError("the synthetic executor needs --machine")
        md = load_machine(machine)
        return SyntheticExecutor(
            md, NoiseModel(jitter, seed),
            SyntheticConfig(snoop_mode=snoop_mode, cod=cod,
                            core_freq_request_hz=core_freq_hz,
                            uncore_freq_request_hz=uncore_freq_hz))
    if kind == "real":
        return RealExecutor(base_frequency_hz=base_frequency_hz)
    raise InvariantError(f"unknown executor kind {kind!r} (real|synthetic)")


def op_probe_latency(machine: str | None, working_set_bytes: int,
                     executor: str = "synthetic", seed: int = 0,
                     jitter: float = 0.0, snoop_mode: str | None = None,
                     cod: bool | None = None,
                     repetitions: int = DEFAULT_REPETITIONS,
                     base_frequency_hz: float | None = None) -> ProbeResult:
    ex = _executor(executor, machine, seed, jitter, snoop_mode, cod,
                   base_frequency_hz=base_frequency_hz)
    return ex.run_latency_probe(working_set_bytes, repetitions=repetitions)


def op_probe_instruction(machine: str | None, mnemonic: str, width: str,
                         precision: str, mode: str = "latency", chains: int = 8,
                         executor: str = "synthetic", seed: int = 0,
                         jitter: float = 0.0,
                         repetitions: int = DEFAULT_REPETITIONS,
                         base_frequency_hz: float | None = None) -> ProbeResult:
    ex = _executor(executor, machine, seed, jitter,
                   base_frequency_hz=base_frequency_hz)
    return ex.run_instruction_probe(mnemonic, width, precision, mode=mode,
                                    chains=chains, repetitions=repetitions)


def op_probe_bandwidth(machine: str | None, kernel: str, working_set_bytes: int,
                       cores: int = 1, isa_width: str = "avx",
                       executor: str = "synthetic", seed: int = 0,
                       jitter: float = 0.0, snoop_mode: str | None = None,
                       cod: bool | None = None,
                       repetitions: int = DEFAULT_REPETITIONS,
                       base_frequency_hz: float | None = None) -> ProbeResult:
    ex = _executor(executor, machine, seed, jitter, snoop_mode, cod,
                   base_frequency_hz=base_frequency_hz)
    kd = load_kernel(kernel, isa_width)
    return ex.run_bandwidth_probe(kd, working_set_bytes, cores=cores,
                                  repetitions=repetitions)


def op_probe_gather(machine: str | None, source_level: str, cl_spread: int,
                    executor: str = "synthetic", seed: int = 0,
                    jitter: float = 0.0,
                    repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
    if executor != "synthetic":
        raise CapabilityError(
            "gather probes have no real-executor template; use the synthetic executor")
    ex = _executor(executor, machine, seed, jitter)
    return ex.run_gather_probe(source_level, cl_spread, repetitions=repetitions)


def op_observe_frequency(machine: str | None, executor: str = "synthetic",
                         workload_class: str = "avx", cores: int | None = None,
                         duration_s: float = 0.5, seed: int = 0,
                         core_freq_hz: float | None = None,
                         uncore_freq_hz: float | None = None,
                         base_frequency_hz: float | None = None) -> dict:
    ex = _executor(executor, machine, seed, core_freq_hz=core_freq_hz,
                   uncore_freq_hz=uncore_freq_hz,
                   base_frequency_hz=base_frequency_hz)
    return ex.observe_effective_frequency(duration_s, workload_class=workload_class,
                                          cores=cores)


def op_sweep(machine: str | None, workload: str,
             core_freqs_hz: list[float | None] | None = None,
             uncore_freqs_hz: list[float | None] | None = None,
             cores: list[int] | None = None, dwell_s: float = 0.5,
             executor: str = "synthetic", seed: int = 0, jitter: float = 0.0,
             working_set_bytes: int | None = None, isa_width: str = "avx",
             snoop_mode: str | None = None,
             base_frequency_hz: float | None = None) -> SweepResult:
    ex = _executor(executor, machine, seed, jitter, snoop_mode,
                   base_frequency_hz=base_frequency_hz)
    grid = SweepGrid(
        core_freqs_hz=tuple(core_freqs_hz) if core_freqs_hz else (None,),
        uncore_freqs_hz=tuple(uncore_freqs_hz) if uncore_freqs_hz else (None,),
        cores=tuple(cores) if cores else (1,),
    )
    wl = resolve_workload(workload, working_set_bytes, isa_width)
    return run_sweep(ex, grid, wl, dwell_s=dwell_s, seed=seed)


def op_report_efficiency(series_points: list | None = None,
                         results: list[ProbeResult] | None = None,
                         epsilon: float = 0.02) -> EfficiencyReport:
    if series_points:
        series = ScalingSeries.from_pairs(series_points)
    elif results:
        from .analysis import series_from_probe_results
        series = series_from_probe_results(results)
    else:
        raise InvariantError("efficiency report needs a series or bandwidth results")
    return efficiency_report(series, epsilon)


def op_report_energy(performance: float, unit: str, energy_joules: float,
                     duration_s: float, core_freq_hz: float | None = None,
                     uncore_freq_hz: float | None = None) -> EnergyReport:
    return energy_metrics(performance, unit, energy_joules, duration_s,
                          core_freq_hz, uncore_freq_hz)


def op_report_compare(probe: dict | ProbeResult, prediction: dict | EcmPrediction,
                      tolerance: float | None = None) -> DeviationReport:
    if isinstance(probe, dict):
        probe = probe_result_from_dict(probe)
    if isinstance(prediction, dict):
        prediction = prediction_from_dict(prediction)
    return compare_prediction(probe, prediction, tolerance)
