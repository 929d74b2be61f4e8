"""Analytic loop-performance model.

Composes per-iteration cycle counts from three ingredients: in-core execution
(port, address-generation, and retirement bounds), data transfers between
adjacent memory hierarchy levels, and a policy describing how much of the
core time overlaps with transfers.  On the modeled x86 server chips the
transfer terms and the load/store port time add up; an alternative policy
treats all terms as fully overlapping.
"""

import math
from dataclasses import dataclass, replace

from .errors import InvariantError, LookupError_
from .kernels import (
    KernelDescriptor,
    KernelInstruction,
    TrafficProfile,
    link_names,
    traffic_profile,
)
from .machine.types import MachineDescription
from .units import LINE_SIZE_BYTES

_SIMD_BYTES = {"scalar": 8, "sse": 16, "avx": 32}
_ELEMENT_BYTES = {"sp": 4, "dp": 8, "none": 8}

# default unroll depth for detecting loop-carried dependency chains
CRITICAL_PATH_UNROLL = 2


def _vector_bytes(width: str, precision: str) -> int:
    if width == "scalar":
        return _ELEMENT_BYTES.get(precision, 8)
    return _SIMD_BYTES[width]


def lower_kernel(kernel: KernelDescriptor, md: MachineDescription) -> KernelDescriptor:
    """Replace fma instructions with mul + add pairs on machines without an
    FMA unit at the requested width/precision."""
    needs_lowering = any(
        i.mnemonic == "fma" and i.count_per_iteration
        and not md.has_instruction("fma", i.width, i.precision)
        for i in kernel.instructions)
    if not needs_lowering:
        return kernel

    new_insts: list[KernelInstruction] = []
    index_map: dict[int, int] = {}  # old index -> index of the replacement tail
    for old_idx, inst in enumerate(kernel.instructions):
        if (inst.mnemonic == "fma"
                and not md.has_instruction("fma", inst.width, inst.precision)):
            deps = tuple(index_map[d] for d in inst.depends_on)
            mul = KernelInstruction("mul", inst.width, inst.precision,
                                    inst.count_per_iteration, deps)
            new_insts.append(mul)
            add = KernelInstruction("add", inst.width, inst.precision,
                                    inst.count_per_iteration,
                                    deps + (len(new_insts) - 1,))
            new_insts.append(add)
            index_map[old_idx] = len(new_insts) - 1
        else:
            new_insts.append(replace(
                inst, depends_on=tuple(index_map[d] for d in inst.depends_on)))
            index_map[old_idx] = len(new_insts) - 1
    carried = tuple((index_map[p], index_map[c]) for p, c in kernel.loop_carried)
    lowered = replace(kernel, instructions=tuple(new_insts), loop_carried=carried)
    lowered.validate()
    return lowered


@dataclass(frozen=True)
class InCoreTime:
    """Per-iteration in-core cycle bounds."""

    t_throughput_cycles_per_iteration: float
    t_critical_path_cycles_per_iteration: float
    per_port_cycles: dict[str, float]
    t_agu_cycles: float
    t_retire_cycles: float
    # load/store port time plus the AGU bound; the part of core time that
    # cannot overlap with cache transfers on the modeled chips
    t_data_path_cycles: float
    # everything else (arithmetic pipes, LEA, retirement), free to overlap
    t_overlap_cycles: float
    # latency sum along the longest dependency chain of a single iteration
    body_chain_cycles: float

    def validate(self) -> None:
        if self.t_critical_path_cycles_per_iteration < self.t_throughput_cycles_per_iteration - 1e-12:
            raise InvariantError("t_critical_path must be >= t_throughput")


def agu_bound(kernel: KernelDescriptor, md: MachineDescription) -> float:
    """Cycles per iteration imposed by address generation.

    Loads and stores each need one address from a general-purpose AGU; a
    kernel that pre-computes store addresses via LEA hands them to the simple
    store AGU instead, where the machine has one.
    """
    addresses = 0
    route_stores_to_simple_agu = (kernel.uses_lea_trick()
                                  and md.ports.simple_store_agu_present)
    for inst in kernel.instructions:
        if inst.mnemonic in ("load", "gather"):
            addresses += inst.count_per_iteration
        elif inst.mnemonic == "store" and not route_stores_to_simple_agu:
            addresses += inst.count_per_iteration
    return addresses / md.ports.general_agus


def incore_time(kernel: KernelDescriptor, md: MachineDescription,
                unroll: int = CRITICAL_PATH_UNROLL) -> InCoreTime:
    """Throughput and critical-path cycle bounds for one loop iteration.

    The throughput bound assumes all instructions issue independently: every
    pipeline (load units, store unit, each arithmetic port class, the AGUs,
    retirement) accumulates its share, and the busiest one sets the pace.
    The critical-path bound follows the dependency chains instead, iterated
    to steady state over loop-carried edges.
    """
    kernel = lower_kernel(kernel, md)
    ports = md.ports
    per_port: dict[str, float] = {}
    retire_slots = 0
    latencies: list[float] = []  # per instruction-group, for the chain walk

    def add_port(name: str, cycles: float) -> None:
        per_port[name] = per_port.get(name, 0.0) + cycles

    l1_latency = md.cache_levels[0].latency()
    for inst in kernel.instructions:
        n = inst.count_per_iteration
        retire_slots += n
        if inst.mnemonic == "load":
            occupancy = max(1.0, _vector_bytes(inst.width, inst.precision)
                            / ports.load_units.width_bytes_per_cycle)
            add_port("load", n * occupancy / ports.load_units.count)
            latencies.append(l1_latency)
        elif inst.mnemonic == "store":
            occupancy = max(1.0, _vector_bytes(inst.width, inst.precision)
                            / ports.store_units.width_bytes_per_cycle)
            add_port("store", n * occupancy / ports.store_units.count)
            latencies.append(0.0)  # stores sink the chain
        elif inst.mnemonic == "lea":
            add_port("lea", n / max(1, ports.fast_lea_units))
            latencies.append(1.0)
        elif inst.mnemonic == "gather":
            if md.gather_table is None:
                raise LookupError_(
                    f"kernel {kernel.name} uses gather but {md.name} has no gather table")
            cell = md.gather_table.cell(md.cache_levels[0].level_name, 1)
            if cell is None:
                raise LookupError_(f"{md.name}: gather table has no in-L1 entry")
            add_port("gather", n * cell)
            latencies.append(cell)
        else:
            spec = md.lookup_instruction(inst.mnemonic, inst.width, inst.precision)
            add_port(spec.port_class, n * spec.inverse_throughput_cycles)
            latencies.append(spec.latency_cycles)

    t_agu = agu_bound(kernel, md)
    t_retire = retire_slots / ports.retire_slots_per_cycle
    t_data = max([per_port.get("load", 0.0), per_port.get("store", 0.0), t_agu])
    t_overlap = max([c for name, c in per_port.items()
                     if name not in ("load", "store")] + [t_retire])
    t_throughput = max(t_data, t_overlap)

    chain_slope = _chain_slope(kernel, latencies, unroll)
    body_chain = _longest_chain(kernel, latencies, 1)
    t_critical = max(t_throughput, chain_slope)

    result = InCoreTime(
        t_throughput_cycles_per_iteration=t_throughput,
        t_critical_path_cycles_per_iteration=t_critical,
        per_port_cycles=per_port,
        t_agu_cycles=t_agu,
        t_retire_cycles=t_retire,
        t_data_path_cycles=t_data,
        t_overlap_cycles=t_overlap,
        body_chain_cycles=body_chain,
    )
    result.validate()
    return result


def _longest_chain(kernel: KernelDescriptor, latencies: list[float], copies: int) -> float:
    """Longest latency path over *copies* unrolled iterations, following
    intra-iteration dependencies and loop-carried edges."""
    n = len(kernel.instructions)
    best = 0.0
    path: dict[tuple[int, int], float] = {}
    for it in range(copies):
        for idx, inst in enumerate(kernel.instructions):
            if inst.count_per_iteration == 0:
                path[(it, idx)] = 0.0
                continue
            incoming = [path[(it, d)] for d in inst.depends_on]
            if it > 0:
                incoming += [path[(it - 1, p)]
                             for p, c in kernel.loop_carried if c == idx]
            value = max(incoming, default=0.0) + latencies[idx]
            path[(it, idx)] = value
            best = max(best, value)
    return best


def _chain_slope(kernel: KernelDescriptor, latencies: list[float], unroll: int) -> float:
    """Steady-state cycles per iteration added by dependency chains.

    With no loop-carried edges consecutive iterations overlap fully and the
    slope is zero (the throughput assumption holds); an accumulator-style
    chain converges to its per-iteration latency.
    """
    if not kernel.loop_carried:
        return 0.0
    unroll = max(2, unroll)
    return (_longest_chain(kernel, latencies, unroll)
            - _longest_chain(kernel, latencies, unroll - 1))


# -- transfers ---------------------------------------------------------------

@dataclass(frozen=True)
class TransferTimes:
    """Cycles per iteration on each inter-level link (register<->L1 excluded;
    that time lives in the in-core data-path term)."""

    cycles: dict[str, float]
    frequency_hz: float
    memory_bandwidth_bytes_per_s: float | None = None
    used_theoretical_memory_bw: bool = False

    def total(self) -> float:
        return sum(self.cycles.values())

    def memory_link(self) -> str | None:
        for name in self.cycles:
            if name.endswith("_mem"):
                return name
        return None


def transfer_times(traffic: TrafficProfile, md: MachineDescription,
                   frequency_hz: float | None = None,
                   snoop_mode: str | None = None) -> TransferTimes:
    """Per-link transfer cycles for a traffic profile.

    Cache links divide bytes by the link's effective (pattern-derated)
    bandwidth.  The memory link uses the sustained bandwidth matched to the
    access pattern, converted to bytes per cycle at the stated core
    frequency; when no sustained entry exists the theoretical bandwidth is
    used and flagged.
    """
    if frequency_hz is None:
        frequency_hz = md.frequency.base_hz
    names = link_names(md)
    cycles: dict[str, float] = {}
    for i, name in enumerate(names[1:-1]):
        bw = md.cache_levels[i].effective_link_bandwidth(traffic.pattern)
        if bw is None:
            raise InvariantError(
                f"{md.name}: level {md.cache_levels[i].level_name} has no "
                "inter-level bandwidth but traffic crosses it")
        cycles[name] = traffic.link(name).total_bytes / bw
    mem_name = names[-1]
    mem_bytes = traffic.link(mem_name).total_bytes
    sustained, matched = md.memory.sustained(traffic.pattern)
    if snoop_mode is not None and snoop_mode in md.snoop_profiles:
        sustained *= md.snoop_profiles[snoop_mode].scale(traffic.pattern)
    mem_bw_cy = sustained / frequency_hz
    cycles[mem_name] = mem_bytes / mem_bw_cy if mem_bytes else 0.0
    return TransferTimes(
        cycles=cycles,
        frequency_hz=frequency_hz,
        memory_bandwidth_bytes_per_s=sustained,
        used_theoretical_memory_bw=not matched,
    )


# -- composition --------------------------------------------------------------

OVERLAP_POLICIES = ("none", "full")


@dataclass(frozen=True)
class EcmPrediction:
    """Composed runtime and bandwidth prediction for one kernel/machine pair."""

    kernel_name: str
    machine_name: str
    overlap_policy: str
    in_core: InCoreTime
    transfer_cycles: dict[str, float]
    composed_cycles_per_iteration: float
    frequency_hz: float
    app_bytes_per_iteration: float
    memory_bytes_per_iteration: float
    predicted_bandwidth_bytes_per_cycle: float
    predicted_bandwidth_bytes_per_s: float
    n_saturation: int
    working_set_bytes: int | None = None
    residence_level: str | None = None
    flops_per_iteration: int = 0
    warnings: tuple[str, ...] = ()

    def memory_transfer_cycles(self) -> float:
        return next((cy for name, cy in self.transfer_cycles.items()
                     if name.endswith("_mem")), 0.0)


def compose(in_core: InCoreTime, transfers: TransferTimes, policy: str = "none",
            kernel: KernelDescriptor | None = None,
            md: MachineDescription | None = None,
            traffic: TrafficProfile | None = None) -> EcmPrediction:
    """Put in-core and transfer times together under an overlap policy.

    none: transfer terms add to the non-overlapping core time (load/store
    port plus AGU cycles); arithmetic-only time overlaps and can only
    dominate via max.  full: the runtime is the largest single contribution.
    """
    if policy not in OVERLAP_POLICIES:
        raise InvariantError(f"unknown overlap policy {policy!r}")
    terms = transfers.cycles
    if policy == "none":
        composed = max(in_core.t_overlap_cycles,
                       in_core.t_data_path_cycles + sum(terms.values()))
    else:
        composed = max([in_core.t_overlap_cycles, in_core.t_data_path_cycles,
                        *terms.values()])

    app_bytes = 0.0
    flops = 0
    if kernel is not None:
        app_bytes = sum(s.bytes_per_element * kernel.elements_per_iteration
                        for s in kernel.streams)
        flops = kernel.flops_per_iteration
    mem_bytes = 0.0
    if traffic is not None:
        mem_link = [n for n in traffic.links if n.endswith("_mem")]
        if mem_link:
            mem_bytes = traffic.link(mem_link[0]).total_bytes
    mem_cycles = next((cy for name, cy in terms.items()
                       if name.endswith("_mem")), 0.0)

    if mem_cycles > 0:
        ratio = composed / mem_cycles
        if md is not None:
            ratio = min(ratio, md.cores)  # saturation beyond the chip is moot
        n_saturation = max(1, math.ceil(min(ratio, 2**31) - 1e-12))
    else:
        n_saturation = md.cores if md is not None else 1

    bw_cy = app_bytes / composed if composed > 0 else 0.0
    warnings = ()
    if transfers.used_theoretical_memory_bw and mem_bytes:
        warnings = ("memory link uses the theoretical bandwidth; no sustained "
                    "entry matched the access pattern",)
    return EcmPrediction(
        kernel_name=kernel.name if kernel is not None else "",
        machine_name=md.name if md is not None else "",
        overlap_policy=policy,
        in_core=in_core,
        transfer_cycles=dict(terms),
        composed_cycles_per_iteration=composed,
        frequency_hz=transfers.frequency_hz,
        app_bytes_per_iteration=app_bytes,
        memory_bytes_per_iteration=mem_bytes,
        predicted_bandwidth_bytes_per_cycle=bw_cy,
        predicted_bandwidth_bytes_per_s=bw_cy * transfers.frequency_hz,
        n_saturation=n_saturation,
        working_set_bytes=traffic.working_set_bytes if traffic is not None else None,
        residence_level=traffic.residence_level if traffic is not None else None,
        flops_per_iteration=flops,
        warnings=warnings,
    )


def predict(kernel: KernelDescriptor, working_set_bytes: int,
            md: MachineDescription, cores: int = 1, policy: str = "none",
            frequency_hz: float | None = None,
            snoop_mode: str | None = None) -> EcmPrediction:
    """Full pipeline: traffic profile, in-core time, transfers, composition.

    Cycles are normalized to the base core frequency unless another stated
    frequency is passed.
    """
    traffic = traffic_profile(kernel, working_set_bytes, md, cores)
    in_core = incore_time(kernel, md)
    transfers = transfer_times(traffic, md, frequency_hz, snoop_mode)
    return compose(in_core, transfers, policy, kernel=kernel, md=md, traffic=traffic)


def ecm_notation(pred: EcmPrediction) -> str:
    """Braced summary string: {T_OL ∥ T_nOL | T_link | ...} cy/it, innermost
    link first, rounded to two decimals."""
    parts = " | ".join(f"{cy:.2f}" for cy in pred.transfer_cycles.values())
    core = (f"{pred.in_core.t_overlap_cycles:.2f} ∥ "
            f"{pred.in_core.t_data_path_cycles:.2f}")
    return f"{{{core} | {parts}}} cy/it = {pred.composed_cycles_per_iteration:.2f} cy/it"


# -- multicore scaling --------------------------------------------------------

@dataclass(frozen=True)
class ScalingPrediction:
    points: tuple[tuple[int, float], ...]  # (cores, app-level bytes/s)
    n_saturation: int
    saturated_bandwidth_bytes_per_s: float


def scaling_prediction(pred: EcmPrediction, md: MachineDescription,
                       cores: int | None = None,
                       snoop_mode: str | None = None) -> ScalingPrediction:
    """Bandwidth versus core count for a memory-resident working set.

    Single-core bandwidth multiplies with the core count until the sustained
    memory bandwidth caps it; the saturation point is where the composed
    runtime is covered entirely by memory transfer cycles.
    """
    if pred.memory_bytes_per_iteration <= 0:
        raise InvariantError(
            "scaling_prediction requires a prediction for an in-memory working set")
    if cores is None:
        cores = md.cores
    single_app_bw = pred.predicted_bandwidth_bytes_per_s
    app_per_bus = pred.app_bytes_per_iteration / pred.memory_bytes_per_iteration
    sustained = pred.memory_bytes_per_iteration / pred.memory_transfer_cycles() \
        * pred.frequency_hz  # bus-level cap implied by the transfer term
    if snoop_mode is not None and snoop_mode in md.snoop_profiles:
        pass  # transfer term already carries the snoop scale when predicted with it
    cap_app = sustained * app_per_bus
    points = tuple((n, min(n * single_app_bw, cap_app)) for n in range(1, cores + 1))
    return ScalingPrediction(
        points=points,
        n_saturation=pred.n_saturation,
        saturated_bandwidth_bytes_per_s=cap_app,
    )


# -- gather -------------------------------------------------------------------

def predict_gather(md: MachineDescription, source_level: str, cl_spread: int) -> float:
    """Cycles per gather instruction for data in *source_level* spread over
    *cl_spread* cache lines.

    Tabulated cells are returned exactly.  Missing cells are estimated from
    the nearest tabulated spread plus per-line transfer time, or, without any
    row for the level, from the in-L1 cost plus line transfers and an
    amortized share of the level's access latency; estimates, not
    measurements.
    """
    if md.gather_table is None:
        raise LookupError_(f"{md.name} has no gather table")
    if cl_spread < 1:
        raise InvariantError("cl_spread must be >= 1")
    level_names = [lv.level_name for lv in md.cache_levels] + ["MEM"]
    if source_level not in level_names:
        raise LookupError_(f"unknown level {source_level!r}", level_names)
    cell = md.gather_table.cell(source_level, cl_spread)
    if cell is not None:
        return cell

    line_cycles = _line_transfer_cycles(md, source_level)
    row = md.gather_table.cycles.get(source_level, {})
    if row:
        lower = max((s for s in row if s <= cl_spread), default=None)
        if lower is not None:
            return row[lower] + (cl_spread - lower) * line_cycles
        nearest = min(row)
        return row[nearest]
    l1_row = md.gather_table.cycles.get(md.cache_levels[0].level_name, {})
    intrinsic = l1_row.get(cl_spread, min(l1_row.values()) if l1_row else 2.0 * cl_spread)
    latency_excess = _level_latency(md, source_level) - md.cache_levels[0].latency()
    return max(intrinsic, cl_spread * line_cycles + latency_excess / 8.0)


def _line_transfer_cycles(md: MachineDescription, source_level: str) -> float:
    """Cycles to move one cache line from *source_level* into L1."""
    cycles = 0.0
    for lv in md.cache_levels:
        if lv.level_name == source_level:
            return cycles
        if lv.inter_level_bytes_per_cycle:
            cycles += LINE_SIZE_BYTES / lv.inter_level_bytes_per_cycle
    sustained, _ = md.memory.sustained(None)
    cycles += LINE_SIZE_BYTES / (sustained / md.frequency.base_hz)
    return cycles


def _level_latency(md: MachineDescription, level: str) -> float:
    if level == "MEM":
        return md.memory.latency()
    return md.level(level).latency()
