"""Result serialization: JSON-lines records and flat CSV tables.

Probes and sweeps emit one JSON object per line so runs can be concatenated
and piped; the CSV form flattens nested fields with dotted headers for
direct plotting.  Round-trips are lossless for every record type.
"""

import csv
import io
import json
from dataclasses import asdict

from .ecm import EcmPrediction, InCoreTime
from .errors import SchemaError
from .probes.base import Environment, ProbeResult, SweepPoint, SweepResult


def probe_result_to_dict(result: ProbeResult) -> dict:
    doc = asdict(result)
    doc["record"] = "probe_result"
    return doc


def probe_result_from_dict(doc: dict) -> ProbeResult:
    if doc.get("record") not in (None, "probe_result"):
        raise SchemaError(f"not a probe_result record: {doc.get('record')!r}")
    env = doc["environment"]
    result = ProbeResult(
        probe_name=doc["probe_name"],
        parameters=dict(doc["parameters"]),
        repetitions=tuple(doc["repetitions"]),
        statistic=doc["statistic"],
        value=doc["value"],
        unit=doc["unit"],
        environment=Environment(
            core_freq_hz=env["core_freq_hz"],
            uncore_freq_hz=env.get("uncore_freq_hz"),
            prefetchers_on=env.get("prefetchers_on", True),
            pinned_cores=tuple(env.get("pinned_cores", ())),
            snoop_mode=env.get("snoop_mode"),
        ),
        machine=doc.get("machine"),
        extra_values=dict(doc.get("extra_values", {})),
    )
    result.validate()
    return result


def sweep_result_to_dict(result: SweepResult) -> dict:
    doc = asdict(result)
    doc["record"] = "sweep_result"
    return doc


def sweep_result_from_dict(doc: dict) -> SweepResult:
    if doc.get("record") not in (None, "sweep_result"):
        raise SchemaError(f"not a sweep_result record: {doc.get('record')!r}")
    return SweepResult(
        workload=doc["workload"],
        machine=doc.get("machine"),
        core_freq_axis=tuple(doc["core_freq_axis"]),
        uncore_freq_axis=tuple(doc["uncore_freq_axis"]),
        cores_axis=tuple(doc["cores_axis"]),
        points=tuple(SweepPoint(**p) for p in doc["points"]),
        seed=doc.get("seed"),
    )


def prediction_to_dict(pred: EcmPrediction) -> dict:
    doc = asdict(pred)
    doc["record"] = "ecm_prediction"
    return doc


def prediction_from_dict(doc: dict) -> EcmPrediction:
    if doc.get("record") not in (None, "ecm_prediction"):
        raise SchemaError(f"not an ecm_prediction record: {doc.get('record')!r}")
    body = {k: v for k, v in doc.items() if k != "record"}
    body["in_core"] = InCoreTime(**body["in_core"])
    body["warnings"] = tuple(body.get("warnings", ()))
    return EcmPrediction(**body)


_LOADERS = {
    "probe_result": probe_result_from_dict,
    "sweep_result": sweep_result_from_dict,
    "ecm_prediction": prediction_from_dict,
}


def to_record_dict(obj) -> dict:
    if isinstance(obj, ProbeResult):
        return probe_result_to_dict(obj)
    if isinstance(obj, SweepResult):
        return sweep_result_to_dict(obj)
    if isinstance(obj, EcmPrediction):
        return prediction_to_dict(obj)
    raise SchemaError(f"cannot serialize {type(obj).__name__} as a result record")


def write_json_lines(objects, stream) -> None:
    for obj in objects:
        stream.write(json.dumps(to_record_dict(obj), sort_keys=True) + "\n")


def read_json_lines(stream) -> list:
    records = []
    for i, line in enumerate(stream):
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        kind = doc.get("record")
        if kind not in _LOADERS:
            raise SchemaError(f"line {i + 1}: unknown record kind {kind!r}")
        records.append(_LOADERS[kind](doc))
    return records


def flatten_record(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_record(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(value)
        else:
            flat[name] = value
    return flat


def to_csv(objects) -> str:
    """Flat table; sweep results expand to one row per grid point."""
    rows = []
    for obj in objects:
        if isinstance(obj, SweepResult):
            base = {"record": "sweep_point", "workload": obj.workload,
                    "machine": obj.machine, "seed": obj.seed}
            for point in obj.points:
                rows.append({**base, **flatten_record(asdict(point))})
        else:
            rows.append(flatten_record(to_record_dict(obj)))
    if not rows:
        return ""
    headers: list[str] = []
    for row in rows:
        for key in row:
            if key not in headers:
                headers.append(key)
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=headers)
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()
