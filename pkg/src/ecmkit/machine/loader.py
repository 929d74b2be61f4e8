"""Loading, validating, and serializing machine description files.

Machine files are UTF-8 JSON with fixed units (Hz, bytes, cycles, watts) and
no expressions.  Top-level keys: name, cores, smt, frequency, caches[],
memory, ports, instructions[], gather, snoop_profiles{}, plus the optional
numa_domains and info blocks.  Unknown keys are rejected unless the loader
runs in lenient mode.
"""

import json
from importlib import resources
from pathlib import Path

from ..errors import SchemaError
from .types import (
    CacheLevelSpec,
    FrequencyDomainSpec,
    GatherProfile,
    InstSpec,
    MachineDescription,
    MemorySpec,
    PortModel,
    PowerModel,
    SnoopProfile,
    UnitGroup,
)

SHIPPED_MACHINES = ("snb", "ivb", "hsw", "bdw")

_TOP_KEYS = {"name", "cores", "smt", "frequency", "caches", "memory", "ports",
             "instructions", "gather", "snoop_profiles", "numa_domains", "info"}
_FREQ_KEYS = {"base_hz", "max_all_core_turbo_hz", "avx_base_hz",
              "avx_all_core_turbo_hz", "uncore_min_hz", "uncore_max_hz",
              "tdp_watts", "power_model"}
_POWER_KEYS = {"idle_watts", "core_watts_per_ghz_per_core", "uncore_watts_per_ghz",
               "sse_power_scale"}
_CACHE_KEYS = {"level", "capacity_bytes", "per_core", "load_path_bytes_per_cycle",
               "store_path_bytes_per_cycle", "inter_level_bytes_per_cycle",
               "latency_cycles", "derate", "parallel_efficiency"}
_MEMORY_KEYS = {"channels", "theoretical_bw_bytes_per_s", "sustained_bw_bytes_per_s",
                "latency_cycles", "default_snoop_mode", "uncore_bytes_per_cycle"}
_PORT_KEYS = {"load_units", "store_units", "general_agus", "retire_slots_per_cycle",
              "simple_store_agu_present", "fast_lea_units",
              "avx_load_blocks_both_load_units", "avx_store_cycles"}
_UNIT_KEYS = {"count", "width_bytes_per_cycle"}
_INST_KEYS = {"mnemonic", "width", "precision", "latency_cycles",
              "inverse_throughput_cycles", "port_class"}
_SNOOP_KEYS = {"mode_name", "memory_latency_cycles", "l3_latency_cycles",
               "bandwidth_scale"}


def _check_keys(obj: dict, allowed: set[str], where: str, lenient: bool) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown and not lenient:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)} (allowed: {sorted(allowed)})")


def _require(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing required key {key!r}")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in _as_tuple(types):
        raise SchemaError(
            f"{where}.{key}: expected {_type_names(types)}, got {type(value).__name__}")
    return value


def _optional(obj: dict, key: str, types, where: str, default=None):
    if key not in obj or obj[key] is None:
        return default
    return _require(obj, key, types, where)


def _as_tuple(types):
    return types if isinstance(types, tuple) else (types,)


def _type_names(types) -> str:
    return "/".join(t.__name__ for t in _as_tuple(types))


_NUM = (int, float)


def _num_map(obj, where: str, key_type=str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object of numbers")
    out = {}
    for k, v in obj.items():
        if not isinstance(v, _NUM) or isinstance(v, bool):
            raise SchemaError(f"{where}[{k}]: expected a number, got {type(v).__name__}")
        out[key_type(k)] = float(v)
    return out


def _parse_frequency(doc: dict, lenient: bool) -> FrequencyDomainSpec:
    _check_keys(doc, _FREQ_KEYS, "frequency", lenient)
    power = None
    if doc.get("power_model") is not None:
        pdoc = doc["power_model"]
        _check_keys(pdoc, _POWER_KEYS, "frequency.power_model", lenient)
        power = PowerModel(
            idle_watts=float(_require(pdoc, "idle_watts", _NUM, "frequency.power_model")),
            core_watts_per_ghz_per_core=float(_require(
                pdoc, "core_watts_per_ghz_per_core", _NUM, "frequency.power_model")),
            uncore_watts_per_ghz=float(_optional(
                pdoc, "uncore_watts_per_ghz", _NUM, "frequency.power_model", 0.0)),
            sse_power_scale=float(_optional(
                pdoc, "sse_power_scale", _NUM, "frequency.power_model", 1.0)),
        )
    opt = lambda key: _optional(doc, key, _NUM, "frequency")
    return FrequencyDomainSpec(
        base_hz=float(_require(doc, "base_hz", _NUM, "frequency")),
        tdp_watts=float(_require(doc, "tdp_watts", _NUM, "frequency")),
        max_all_core_turbo_hz=opt("max_all_core_turbo_hz"),
        avx_base_hz=opt("avx_base_hz"),
        avx_all_core_turbo_hz=opt("avx_all_core_turbo_hz"),
        uncore_min_hz=opt("uncore_min_hz"),
        uncore_max_hz=opt("uncore_max_hz"),
        power_model=power,
    )


def _parse_cache(doc: dict, index: int, lenient: bool) -> CacheLevelSpec:
    where = f"caches[{index}]"
    _check_keys(doc, _CACHE_KEYS, where, lenient)
    return CacheLevelSpec(
        level_name=_require(doc, "level", str, where),
        capacity_bytes=int(_require(doc, "capacity_bytes", int, where)),
        per_core=_require(doc, "per_core", bool, where),
        load_path_bytes_per_cycle=float(
            _require(doc, "load_path_bytes_per_cycle", _NUM, where)),
        store_path_bytes_per_cycle=float(
            _require(doc, "store_path_bytes_per_cycle", _NUM, where)),
        inter_level_bytes_per_cycle=_optional(
            doc, "inter_level_bytes_per_cycle", _NUM, where),
        latency_cycles=_num_map(_require(doc, "latency_cycles", dict, where),
                                f"{where}.latency_cycles"),
        derate=_num_map(doc.get("derate", {}), f"{where}.derate"),
        parallel_efficiency=_num_map(doc.get("parallel_efficiency", {}),
                                     f"{where}.parallel_efficiency"),
    )


def _parse_memory(doc: dict, lenient: bool) -> MemorySpec:
    _check_keys(doc, _MEMORY_KEYS, "memory", lenient)
    return MemorySpec(
        channels=int(_require(doc, "channels", int, "memory")),
        theoretical_bw_bytes_per_s=float(
            _require(doc, "theoretical_bw_bytes_per_s", _NUM, "memory")),
        latency_cycles=_num_map(_require(doc, "latency_cycles", dict, "memory"),
                                "memory.latency_cycles"),
        sustained_bw_bytes_per_s=_num_map(doc.get("sustained_bw_bytes_per_s", {}),
                                          "memory.sustained_bw_bytes_per_s"),
        default_snoop_mode=_optional(doc, "default_snoop_mode", str, "memory"),
        uncore_bytes_per_cycle=_optional(doc, "uncore_bytes_per_cycle", _NUM, "memory"),
    )


def _parse_unit_group(doc: dict, where: str, lenient: bool) -> UnitGroup:
    _check_keys(doc, _UNIT_KEYS, where, lenient)
    return UnitGroup(
        count=int(_require(doc, "count", int, where)),
        width_bytes_per_cycle=float(_require(doc, "width_bytes_per_cycle", _NUM, where)),
    )


def _parse_ports(doc: dict, lenient: bool) -> PortModel:
    _check_keys(doc, _PORT_KEYS, "ports", lenient)
    return PortModel(
        load_units=_parse_unit_group(
            _require(doc, "load_units", dict, "ports"), "ports.load_units", lenient),
        store_units=_parse_unit_group(
            _require(doc, "store_units", dict, "ports"), "ports.store_units", lenient),
        general_agus=int(_require(doc, "general_agus", int, "ports")),
        retire_slots_per_cycle=int(_require(doc, "retire_slots_per_cycle", int, "ports")),
        simple_store_agu_present=bool(
            _optional(doc, "simple_store_agu_present", bool, "ports", False)),
        fast_lea_units=int(_optional(doc, "fast_lea_units", int, "ports", 1)),
        avx_load_blocks_both_load_units=bool(
            _optional(doc, "avx_load_blocks_both_load_units", bool, "ports", False)),
        avx_store_cycles=float(_optional(doc, "avx_store_cycles", _NUM, "ports", 1.0)),
    )


def _parse_instruction(doc: dict, index: int, lenient: bool) -> InstSpec:
    where = f"instructions[{index}]"
    _check_keys(doc, _INST_KEYS, where, lenient)
    return InstSpec(
        mnemonic=_require(doc, "mnemonic", str, where),
        width=_require(doc, "width", str, where),
        precision=_require(doc, "precision", str, where),
        latency_cycles=float(_require(doc, "latency_cycles", _NUM, where)),
        inverse_throughput_cycles=float(
            _require(doc, "inverse_throughput_cycles", _NUM, where)),
        port_class=_require(doc, "port_class", str, where),
    )


def _parse_gather(doc: dict) -> GatherProfile:
    cycles: dict[str, dict[int, float]] = {}
    if not isinstance(doc, dict):
        raise SchemaError("gather: expected an object of {level: {spread: cycles}}")
    for level, row in doc.items():
        if not isinstance(row, dict):
            raise SchemaError(f"gather[{level}]: expected an object of {{spread: cycles}}")
        cycles[level] = {}
        for spread, cy in row.items():
            try:
                spread_i = int(spread)
            except (TypeError, ValueError):
                raise SchemaError(f"gather[{level}]: spread keys must be integers")
            if not isinstance(cy, _NUM) or isinstance(cy, bool):
                raise SchemaError(f"gather[{level}][{spread}]: expected a number")
            cycles[level][spread_i] = float(cy)
    return GatherProfile(cycles=cycles)


def _parse_snoop(doc: dict, name: str, lenient: bool) -> SnoopProfile:
    where = f"snoop_profiles[{name}]"
    _check_keys(doc, _SNOOP_KEYS, where, lenient)
    return SnoopProfile(
        mode_name=_optional(doc, "mode_name", str, where, name),
        memory_latency_cycles=float(_require(doc, "memory_latency_cycles", _NUM, where)),
        l3_latency_cycles=float(_require(doc, "l3_latency_cycles", _NUM, where)),
        bandwidth_scale=_num_map(doc.get("bandwidth_scale", {}),
                                 f"{where}.bandwidth_scale"),
    )


def load_machine(source, lenient: bool = False) -> MachineDescription:
    """Parse and fully validate a machine description.

    *source* may be a dict, a JSON string, a path to a .json file, or the name
    of a shipped machine (snb, ivb, hsw, bdw).  Raises SchemaError for
    malformed documents and InvariantError for semantic violations.
    """
    doc = _resolve_source(source)
    _check_keys(doc, _TOP_KEYS, "machine", lenient)
    md = MachineDescription(
        name=_require(doc, "name", str, "machine"),
        cores=int(_require(doc, "cores", int, "machine")),
        smt_threads_per_core=int(_require(doc, "smt", int, "machine")),
        frequency=_parse_frequency(_require(doc, "frequency", dict, "machine"), lenient),
        cache_levels=tuple(
            _parse_cache(c, i, lenient)
            for i, c in enumerate(_require(doc, "caches", list, "machine"))),
        memory=_parse_memory(_require(doc, "memory", dict, "machine"), lenient),
        ports=_parse_ports(_require(doc, "ports", dict, "machine"), lenient),
        instruction_table=tuple(
            _parse_instruction(inst, i, lenient)
            for i, inst in enumerate(_require(doc, "instructions", list, "machine"))),
        gather_table=_parse_gather(doc["gather"]) if doc.get("gather") else None,
        snoop_profiles={
            name: _parse_snoop(prof, name, lenient)
            for name, prof in _require(doc, "snoop_profiles", dict, "machine").items()},
        numa_domains_per_chip=int(_optional(doc, "numa_domains", int, "machine", 1)),
    )
    md.validate()
    return md


def _resolve_source(source) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, Path):
        return _load_json_text(source.read_text(), str(source))
    if isinstance(source, str):
        if source in SHIPPED_MACHINES:
            return json.loads(shipped_machine_text(source))
        stripped = source.lstrip()
        if stripped.startswith("{"):
            return _load_json_text(source, "<string>")
        path = Path(source)
        if path.exists():
            return _load_json_text(path.read_text(), source)
        raise SchemaError(
            f"machine source {source!r} is neither a shipped machine "
            f"{SHIPPED_MACHINES}, an existing file, nor a JSON document")
    raise SchemaError(f"unsupported machine source type {type(source).__name__}")


def _load_json_text(text: str, origin: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{origin}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{origin}: top level must be a JSON object")
    return doc


def shipped_machine_text(name: str) -> str:
    if name not in SHIPPED_MACHINES:
        raise SchemaError(f"unknown shipped machine {name!r} (have: {SHIPPED_MACHINES})")
    return resources.files("ecmkit.machines").joinpath(f"{name}.json").read_text()


def shipped_machine_info(name: str) -> dict:
    """Descriptive metadata block of a shipped file (chip model, release...)."""
    return json.loads(shipped_machine_text(name)).get("info", {})


def serialize_machine(md: MachineDescription) -> dict:
    """Dump a MachineDescription to the machine-file schema.

    load_machine(serialize_machine(md)) == md holds field for field.
    """
    freq: dict = {"base_hz": md.frequency.base_hz, "tdp_watts": md.frequency.tdp_watts}
    for key in ("max_all_core_turbo_hz", "avx_base_hz", "avx_all_core_turbo_hz",
                "uncore_min_hz", "uncore_max_hz"):
        value = getattr(md.frequency, key)
        if value is not None:
            freq[key] = value
    if md.frequency.power_model is not None:
        pm = md.frequency.power_model
        freq["power_model"] = {
            "idle_watts": pm.idle_watts,
            "core_watts_per_ghz_per_core": pm.core_watts_per_ghz_per_core,
            "uncore_watts_per_ghz": pm.uncore_watts_per_ghz,
            "sse_power_scale": pm.sse_power_scale,
        }
    caches = []
    for lv in md.cache_levels:
        entry: dict = {
            "level": lv.level_name,
            "capacity_bytes": lv.capacity_bytes,
            "per_core": lv.per_core,
            "load_path_bytes_per_cycle": lv.load_path_bytes_per_cycle,
            "store_path_bytes_per_cycle": lv.store_path_bytes_per_cycle,
            "latency_cycles": dict(lv.latency_cycles),
        }
        if lv.inter_level_bytes_per_cycle is not None:
            entry["inter_level_bytes_per_cycle"] = lv.inter_level_bytes_per_cycle
        if lv.derate:
            entry["derate"] = dict(lv.derate)
        if lv.parallel_efficiency:
            entry["parallel_efficiency"] = dict(lv.parallel_efficiency)
        caches.append(entry)
    memory: dict = {
        "channels": md.memory.channels,
        "theoretical_bw_bytes_per_s": md.memory.theoretical_bw_bytes_per_s,
        "latency_cycles": dict(md.memory.latency_cycles),
    }
    if md.memory.sustained_bw_bytes_per_s:
        memory["sustained_bw_bytes_per_s"] = dict(md.memory.sustained_bw_bytes_per_s)
    if md.memory.default_snoop_mode is not None:
        memory["default_snoop_mode"] = md.memory.default_snoop_mode
    if md.memory.uncore_bytes_per_cycle is not None:
        memory["uncore_bytes_per_cycle"] = md.memory.uncore_bytes_per_cycle
    doc = {
        "name": md.name,
        "cores": md.cores,
        "smt": md.smt_threads_per_core,
        "numa_domains": md.numa_domains_per_chip,
        "frequency": freq,
        "caches": caches,
        "memory": memory,
        "ports": {
            "load_units": {
                "count": md.ports.load_units.count,
                "width_bytes_per_cycle": md.ports.load_units.width_bytes_per_cycle,
            },
            "store_units": {
                "count": md.ports.store_units.count,
                "width_bytes_per_cycle": md.ports.store_units.width_bytes_per_cycle,
            },
            "general_agus": md.ports.general_agus,
            "retire_slots_per_cycle": md.ports.retire_slots_per_cycle,
            "simple_store_agu_present": md.ports.simple_store_agu_present,
            "fast_lea_units": md.ports.fast_lea_units,
            "avx_load_blocks_both_load_units": md.ports.avx_load_blocks_both_load_units,
            "avx_store_cycles": md.ports.avx_store_cycles,
        },
        "instructions": [
            {
                "mnemonic": i.mnemonic,
                "width": i.width,
                "precision": i.precision,
                "latency_cycles": i.latency_cycles,
                "inverse_throughput_cycles": i.inverse_throughput_cycles,
                "port_class": i.port_class,
            }
            for i in md.instruction_table
        ],
        "snoop_profiles": {
            name: {
                "mode_name": prof.mode_name,
                "memory_latency_cycles": prof.memory_latency_cycles,
                "l3_latency_cycles": prof.l3_latency_cycles,
                "bandwidth_scale": dict(prof.bandwidth_scale),
            }
            for name, prof in md.snoop_profiles.items()
        },
    }
    if md.gather_table is not None:
        doc["gather"] = {
            level: {str(spread): cy for spread, cy in sorted(row.items())}
            for level, row in md.gather_table.cycles.items()
        }
    return doc
