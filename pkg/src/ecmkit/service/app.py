"""HTTP service wrapping the toolkit.

Stateless endpoints over the operation layer: machine queries, predictions,
synthetic (or host, when capable) probes, sweeps, and report math.  Probes
are serialized through a process-wide lock because a measurement owns its
executor for the duration.
"""

import threading
from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import ops
from ..ecm import ecm_notation
from ..errors import CapabilityError, EcmkitError, LookupError_
from ..machine.loader import SHIPPED_MACHINES
from ..results import probe_result_to_dict, sweep_result_to_dict
from . import schemas as S

app = FastAPI(
    title="ecmkit",
    description="Microarchitecture characterization and analytic "
                "loop-performance modeling service",
    version="0.1.0",
)

_probe_lock = threading.Lock()


@app.exception_handler(EcmkitError)
async def _handle_toolkit_error(request: Request, exc: EcmkitError):
    status = 400
    if isinstance(exc, CapabilityError):
        status = 409
    elif isinstance(exc, LookupError_):
        status = 404
    return JSONResponse(status_code=status,
                        content={"detail": str(exc), "kind": type(exc).__name__})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.get("/machines", response_model=list[S.MachineSummary])
def list_machines():
    return ops.op_list_machines()


@app.get("/machines/{name}")
def show_machine(name: str, lenient: bool = False) -> dict:
    if name not in SHIPPED_MACHINES:
        return JSONResponse(status_code=404, content={
            "detail": f"unknown machine {name!r} (have: {list(SHIPPED_MACHINES)})",
            "kind": "LookupError"})
    return ops.op_model_show(name, lenient=lenient)


@app.post("/machines/validate", response_model=S.ValidateResponse)
def validate_machine(req: S.ValidateRequest):
    return ops.op_model_validate(req.machine, lenient=req.lenient)


@app.post("/predict", response_model=S.PredictionModel)
def predict_endpoint(req: S.PredictRequest):
    pred, scaling = ops.op_predict(
        machine=req.machine, kernel=req.kernel, isa_width=req.isa_width,
        working_set_bytes=req.working_set_bytes, cores=req.cores,
        policy=req.policy, frequency_hz=req.frequency_hz,
        snoop_mode=req.snoop_mode, with_scaling=req.with_scaling)
    doc = asdict(pred)
    doc["notation"] = ecm_notation(pred)
    doc["scaling"] = scaling
    return doc


@app.post("/probe/latency", response_model=S.ProbeResultModel)
def probe_latency(req: S.LatencyProbeRequest):
    with _probe_lock:
        result = ops.op_probe_latency(
            machine=req.machine, working_set_bytes=req.working_set_bytes,
            executor=req.executor, seed=req.seed, jitter=req.jitter,
            snoop_mode=req.snoop_mode, cod=req.cod, repetitions=req.repetitions,
            base_frequency_hz=req.base_frequency_hz)
    return probe_result_to_dict(result)


@app.post("/probe/instruction", response_model=S.ProbeResultModel)
def probe_instruction(req: S.InstructionProbeRequest):
    with _probe_lock:
        result = ops.op_probe_instruction(
            machine=req.machine, mnemonic=req.mnemonic, width=req.width,
            precision=req.precision, mode=req.mode, chains=req.chains,
            executor=req.executor, seed=req.seed, jitter=req.jitter,
            repetitions=req.repetitions, base_frequency_hz=req.base_frequency_hz)
    return probe_result_to_dict(result)


@app.post("/probe/bandwidth", response_model=S.ProbeResultModel)
def probe_bandwidth(req: S.BandwidthProbeRequest):
    with _probe_lock:
        result = ops.op_probe_bandwidth(
            machine=req.machine, kernel=req.kernel,
            working_set_bytes=req.working_set_bytes, cores=req.cores,
            isa_width=req.isa_width, executor=req.executor, seed=req.seed,
            jitter=req.jitter, snoop_mode=req.snoop_mode, cod=req.cod,
            repetitions=req.repetitions, base_frequency_hz=req.base_frequency_hz)
    return probe_result_to_dict(result)


@app.post("/probe/gather", response_model=S.ProbeResultModel)
def probe_gather(req: S.GatherProbeRequest):
    with _probe_lock:
        result = ops.op_probe_gather(
            machine=req.machine, source_level=req.source_level,
            cl_spread=req.cl_spread, executor=req.executor, seed=req.seed,
            jitter=req.jitter, repetitions=req.repetitions)
    return probe_result_to_dict(result)


@app.post("/probe/frequency", response_model=S.FrequencyObserveResponse)
def probe_frequency(req: S.FrequencyObserveRequest):
    with _probe_lock:
        return ops.op_observe_frequency(
            machine=req.machine, executor=req.executor,
            workload_class=req.workload_class, cores=req.cores,
            duration_s=req.duration_s, core_freq_hz=req.core_freq_hz,
            uncore_freq_hz=req.uncore_freq_hz,
            base_frequency_hz=req.base_frequency_hz)


@app.post("/sweep", response_model=S.SweepResultModel)
def sweep_endpoint(req: S.SweepRequest):
    with _probe_lock:
        result = ops.op_sweep(
            machine=req.machine, workload=req.workload,
            core_freqs_hz=req.core_freqs_hz, uncore_freqs_hz=req.uncore_freqs_hz,
            cores=req.cores, dwell_s=req.dwell_s, executor=req.executor,
            seed=req.seed, jitter=req.jitter,
            working_set_bytes=req.working_set_bytes, isa_width=req.isa_width,
            snoop_mode=req.snoop_mode, base_frequency_hz=req.base_frequency_hz)
    return sweep_result_to_dict(result)


@app.post("/report/efficiency", response_model=S.EfficiencyResponse)
def report_efficiency(req: S.EfficiencyRequest):
    results = None
    if req.results:
        from ..results import probe_result_from_dict
        results = [probe_result_from_dict(r) for r in req.results]
    report = ops.op_report_efficiency(series_points=req.series, results=results,
                                      epsilon=req.epsilon)
    return asdict(report)


@app.post("/report/energy", response_model=S.EnergyResponse)
def report_energy(req: S.EnergyRequest):
    report = ops.op_report_energy(
        performance=req.performance, unit=req.unit,
        energy_joules=req.energy_joules, duration_s=req.duration_s,
        core_freq_hz=req.core_freq_hz, uncore_freq_hz=req.uncore_freq_hz)
    return asdict(report)


@app.post("/report/compare", response_model=S.CompareResponse)
def report_compare(req: S.CompareRequest):
    report = ops.op_report_compare(req.probe, req.prediction, req.tolerance)
    return asdict(report)
