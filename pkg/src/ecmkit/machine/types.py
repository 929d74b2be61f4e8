"""Machine description domain types.

A MachineDescription captures everything the analytic model and the synthetic
executor need to know about one CPU generation: frequency domains, the cache
hierarchy with per-link bandwidths and latencies, load/store port and address
generation resources, a measured instruction table, gather timings, and snoop
mode profiles.  Instances are immutable after construction and safe to share
across threads.
"""

from dataclasses import dataclass, field

from ..errors import InvariantError, LookupError_
from ..units import LINE_SIZE_BYTES

WIDTHS = ("scalar", "sse", "avx")
PRECISIONS = ("sp", "dp", "none")
SNOOP_MODES = ("ES", "HS", "HS_OSB", "DIR")


@dataclass(frozen=True)
class FrequencyDomainSpec:
    """Core/uncore clock domains and the package power envelope.

    Optional fields are absent features, never zero: a chip without a
    separate AVX frequency license simply has no avx_base_hz.
    """

    base_hz: float
    tdp_watts: float
    max_all_core_turbo_hz: float | None = None
    avx_base_hz: float | None = None
    avx_all_core_turbo_hz: float | None = None
    uncore_min_hz: float | None = None
    uncore_max_hz: float | None = None
    # piecewise-linear package power model used by the synthetic executor:
    # watts = idle + core_watts_per_ghz_per_core * f_core_ghz * cores
    #              + uncore_watts_per_ghz * f_uncore_ghz, clipped at tdp_watts
    power_model: "PowerModel | None" = None

    def validate(self) -> None:
        if self.base_hz <= 0:
            raise InvariantError("frequency.base_hz must be > 0")
        if self.tdp_watts <= 0:
            raise InvariantError("frequency.tdp_watts must be > 0")
        if self.avx_base_hz is not None and self.avx_base_hz > self.base_hz:
            raise InvariantError(
                "frequency.avx_base_hz must be <= base_hz "
                f"({self.avx_base_hz} > {self.base_hz})")
        if (self.max_all_core_turbo_hz is not None
                and self.base_hz > self.max_all_core_turbo_hz):
            raise InvariantError(
                "frequency.base_hz must be <= max_all_core_turbo_hz")
        if (self.avx_base_hz is not None and self.avx_all_core_turbo_hz is not None
                and self.avx_base_hz > self.avx_all_core_turbo_hz):
            raise InvariantError(
                "frequency.avx_base_hz must be <= avx_all_core_turbo_hz")
        if (self.uncore_min_hz is not None and self.uncore_max_hz is not None
                and self.uncore_min_hz > self.uncore_max_hz):
            raise InvariantError("frequency.uncore_min_hz must be <= uncore_max_hz")


@dataclass(frozen=True)
class PowerModel:
    idle_watts: float
    core_watts_per_ghz_per_core: float
    uncore_watts_per_ghz: float = 0.0
    sse_power_scale: float = 1.0  # SSE/scalar code draws less than AVX


@dataclass(frozen=True)
class CacheLevelSpec:
    """One cache level, listed L1 outward.

    load/store path widths are the combined core<->cache widths (Reg<->L1 for
    L1); inter_level_bytes_per_cycle is the link bandwidth to the next-outer
    level, absent on the outermost level (memory bandwidth lives in
    MemorySpec).  derate optionally scales that link per access pattern to an
    effectively attainable bandwidth; the "default" key applies when a
    pattern has no entry.
    """

    level_name: str
    capacity_bytes: int
    per_core: bool
    load_path_bytes_per_cycle: float
    store_path_bytes_per_cycle: float
    latency_cycles: dict[str, float]
    inter_level_bytes_per_cycle: float | None = None
    derate: dict[str, float] = field(default_factory=dict)
    # fraction of ideal linear scaling reached at full core count, keyed by
    # configuration tag (cod_on / cod_off / default); shared levels only
    parallel_efficiency: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        name = self.level_name
        if self.capacity_bytes <= 0 or self.capacity_bytes % LINE_SIZE_BYTES:
            raise InvariantError(
                f"{name}.capacity_bytes must be a positive multiple of "
                f"{LINE_SIZE_BYTES} (got {self.capacity_bytes})")
        for fname, value in (("load_path_bytes_per_cycle", self.load_path_bytes_per_cycle),
                             ("store_path_bytes_per_cycle", self.store_path_bytes_per_cycle)):
            if value <= 0:
                raise InvariantError(f"{name}.{fname} must be > 0")
        if self.inter_level_bytes_per_cycle is not None and self.inter_level_bytes_per_cycle <= 0:
            raise InvariantError(f"{name}.inter_level_bytes_per_cycle must be > 0")
        if not self.latency_cycles:
            raise InvariantError(f"{name}.latency_cycles must not be empty")
        for tag, cy in self.latency_cycles.items():
            if cy <= 0:
                raise InvariantError(f"{name}.latency_cycles[{tag}] must be > 0")
        for pattern, factor in self.derate.items():
            if not 0 < factor <= 1:
                raise InvariantError(f"{name}.derate[{pattern}] must be in (0, 1]")
        for tag, eff in self.parallel_efficiency.items():
            if not 0 < eff <= 1:
                raise InvariantError(f"{name}.parallel_efficiency[{tag}] must be in (0, 1]")

    def latency(self, tag: str | None = None) -> float:
        """Latency for a configuration tag, falling back to 'default'."""
        if tag is not None and tag in self.latency_cycles:
            return self.latency_cycles[tag]
        if "default" in self.latency_cycles:
            return self.latency_cycles["default"]
        raise LookupError_(
            f"no latency for tag {tag!r} on level {self.level_name} and no default",
            sorted(self.latency_cycles))

    def effective_link_bandwidth(self, pattern: str | None = None) -> float | None:
        """inter-level bandwidth with the pattern's derate applied."""
        if self.inter_level_bytes_per_cycle is None:
            return None
        factor = 1.0
        if pattern is not None and pattern in self.derate:
            factor = self.derate[pattern]
        elif "default" in self.derate:
            factor = self.derate["default"]
        return self.inter_level_bytes_per_cycle * factor


@dataclass(frozen=True)
class MemorySpec:
    channels: int
    theoretical_bw_bytes_per_s: float
    latency_cycles: dict[str, float]
    sustained_bw_bytes_per_s: dict[str, float] = field(default_factory=dict)
    default_snoop_mode: str | None = None
    # bytes the uncore moves per uncore cycle; caps memory bandwidth when the
    # uncore clock is lowered (chips with a separate uncore domain only)
    uncore_bytes_per_cycle: float | None = None

    def validate(self) -> None:
        if self.channels <= 0:
            raise InvariantError("memory.channels must be > 0")
        if self.theoretical_bw_bytes_per_s <= 0:
            raise InvariantError("memory.theoretical_bw_bytes_per_s must be > 0")
        for pattern, bw in self.sustained_bw_bytes_per_s.items():
            if bw <= 0:
                raise InvariantError(f"memory.sustained_bw_bytes_per_s[{pattern}] must be > 0")
            if bw > self.theoretical_bw_bytes_per_s:
                raise InvariantError(
                    f"memory.sustained_bw_bytes_per_s[{pattern}] exceeds the "
                    f"theoretical value ({bw} > {self.theoretical_bw_bytes_per_s})")
        for mode, cy in self.latency_cycles.items():
            if cy <= 0:
                raise InvariantError(f"memory.latency_cycles[{mode}] must be > 0")

    def latency(self, mode: str | None = None) -> float:
        for key in (mode, self.default_snoop_mode, "default"):
            if key is not None and key in self.latency_cycles:
                return self.latency_cycles[key]
        raise LookupError_(
            f"no memory latency for snoop mode {mode!r}", sorted(self.latency_cycles))

    def sustained(self, pattern: str | None = None) -> tuple[float, bool]:
        """(bandwidth, matched) for a pattern; falls back to 'default' and
        finally the theoretical value with matched=False."""
        if pattern is not None and pattern in self.sustained_bw_bytes_per_s:
            return self.sustained_bw_bytes_per_s[pattern], True
        if "default" in self.sustained_bw_bytes_per_s:
            return self.sustained_bw_bytes_per_s["default"], True
        return self.theoretical_bw_bytes_per_s, False


@dataclass(frozen=True)
class UnitGroup:
    count: int
    width_bytes_per_cycle: float


@dataclass(frozen=True)
class PortModel:
    """Load/store issue resources and address generation capability."""

    load_units: UnitGroup
    store_units: UnitGroup
    general_agus: int
    retire_slots_per_cycle: int
    simple_store_agu_present: bool = False
    fast_lea_units: int = 1
    avx_load_blocks_both_load_units: bool = False
    avx_store_cycles: float = 1.0

    def validate(self) -> None:
        if self.general_agus < 1:
            raise InvariantError("ports.general_agus must be >= 1")
        if self.retire_slots_per_cycle < 1:
            raise InvariantError("ports.retire_slots_per_cycle must be >= 1")
        if self.load_units.count < 1 or self.load_units.width_bytes_per_cycle <= 0:
            raise InvariantError("ports.load_units must have count >= 1 and width > 0")
        if self.store_units.count < 1 or self.store_units.width_bytes_per_cycle <= 0:
            raise InvariantError("ports.store_units must have count >= 1 and width > 0")
        if self.fast_lea_units < 0:
            raise InvariantError("ports.fast_lea_units must be >= 0")
        if self.avx_store_cycles <= 0:
            raise InvariantError("ports.avx_store_cycles must be > 0")


@dataclass(frozen=True)
class InstSpec:
    mnemonic: str
    width: str  # scalar | sse | avx
    precision: str  # sp | dp | none
    latency_cycles: float
    inverse_throughput_cycles: float
    port_class: str

    def validate(self) -> None:
        key = f"{self.mnemonic}/{self.width}/{self.precision}"
        if self.width not in WIDTHS:
            raise InvariantError(f"instruction {key}: unknown width {self.width!r}")
        if self.precision not in PRECISIONS:
            raise InvariantError(f"instruction {key}: unknown precision {self.precision!r}")
        if self.latency_cycles <= 0 or self.inverse_throughput_cycles <= 0:
            raise InvariantError(
                f"instruction {key}: latency_cycles and inverse_throughput_cycles must be > 0")
        if self.latency_cycles < self.inverse_throughput_cycles:
            raise InvariantError(
                f"instruction {key}: latency_cycles ({self.latency_cycles}) must be >= "
                f"inverse_throughput_cycles ({self.inverse_throughput_cycles})")


CL_SPREADS = (1, 2, 4, 8)


@dataclass(frozen=True)
class GatherProfile:
    """Cycles per gather instruction by (source level, cache lines touched)."""

    cycles: dict[str, dict[int, float]]  # level name -> {cl_spread -> cycles}

    def validate(self, level_names: list[str]) -> None:
        known = list(level_names) + ["MEM"]
        for level, row in self.cycles.items():
            if level not in known:
                raise InvariantError(f"gather: unknown level {level!r} (known: {known})")
            for spread, cy in row.items():
                if spread not in CL_SPREADS:
                    raise InvariantError(f"gather[{level}]: cl_spread must be one of {CL_SPREADS}")
                if cy <= 0:
                    raise InvariantError(f"gather[{level}][{spread}] must be > 0")
        # monotone in spread at and beyond L2 (in-L1 gathers never touch more
        # than the register transfer, so their row may be flat or dip)
        order = [lv for lv in known if lv in self.cycles]
        for level in order:
            if level == level_names[0]:
                continue
            row = self.cycles[level]
            spreads = sorted(row)
            for a, b in zip(spreads, spreads[1:]):
                if row[a] > row[b]:
                    raise InvariantError(
                        f"gather[{level}]: cycles must be non-decreasing in cl_spread "
                        f"({row[a]} at {a} CLs > {row[b]} at {b} CLs)")
        # monotone in level distance for a fixed spread
        for spread in CL_SPREADS:
            prev = None
            for level in order:
                if spread not in self.cycles[level]:
                    continue
                cy = self.cycles[level][spread]
                if prev is not None and cy < prev:
                    raise InvariantError(
                        f"gather[{level}][{spread}]: cycles must be non-decreasing "
                        f"with level distance ({cy} < {prev})")
                prev = cy

    def cell(self, level: str, spread: int) -> float | None:
        return self.cycles.get(level, {}).get(spread)


@dataclass(frozen=True)
class SnoopProfile:
    mode_name: str
    memory_latency_cycles: float
    l3_latency_cycles: float
    bandwidth_scale: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode_name not in SNOOP_MODES:
            raise InvariantError(
                f"snoop profile: unknown mode {self.mode_name!r} (known: {SNOOP_MODES})")
        if self.memory_latency_cycles <= 0 or self.l3_latency_cycles <= 0:
            raise InvariantError(f"snoop profile {self.mode_name}: latencies must be > 0")
        for pattern, scale in self.bandwidth_scale.items():
            if scale <= 0:
                raise InvariantError(
                    f"snoop profile {self.mode_name}: bandwidth_scale[{pattern}] must be > 0")

    def scale(self, pattern: str | None) -> float:
        if pattern is not None and pattern in self.bandwidth_scale:
            return self.bandwidth_scale[pattern]
        return self.bandwidth_scale.get("default", 1.0)


@dataclass(frozen=True)
class MachineDescription:
    name: str
    cores: int
    smt_threads_per_core: int
    frequency: FrequencyDomainSpec
    cache_levels: tuple[CacheLevelSpec, ...]
    memory: MemorySpec
    ports: PortModel
    instruction_table: tuple[InstSpec, ...]
    gather_table: GatherProfile | None = None
    snoop_profiles: dict[str, SnoopProfile] = field(default_factory=dict)
    numa_domains_per_chip: int = 1

    def __post_init__(self):
        object.__setattr__(self, "_index", {
            (i.mnemonic, i.width, i.precision): i for i in self.instruction_table})

    def validate(self) -> None:
        if self.cores < 1:
            raise InvariantError("cores must be >= 1")
        if self.smt_threads_per_core < 1:
            raise InvariantError("smt must be >= 1")
        if self.numa_domains_per_chip not in (1, 2):
            raise InvariantError("numa_domains_per_chip must be 1 or 2")
        self.frequency.validate()
        if not self.cache_levels:
            raise InvariantError("cache_levels must not be empty")
        for level in self.cache_levels:
            level.validate()
        for inner, outer in zip(self.cache_levels, self.cache_levels[1:]):
            if outer.capacity_bytes <= inner.capacity_bytes:
                raise InvariantError(
                    f"capacity_bytes must strictly increase outward "
                    f"({outer.level_name}: {outer.capacity_bytes} <= "
                    f"{inner.level_name}: {inner.capacity_bytes})")
        self.memory.validate()
        self.ports.validate()
        seen: set[tuple[str, str, str]] = set()
        for inst in self.instruction_table:
            inst.validate()
            key = (inst.mnemonic, inst.width, inst.precision)
            if key in seen:
                raise InvariantError(f"duplicate instruction_table row {key}")
            seen.add(key)
        if self.gather_table is not None:
            self.gather_table.validate([lv.level_name for lv in self.cache_levels])
        for name, prof in self.snoop_profiles.items():
            prof.validate()
            if name != prof.mode_name:
                raise InvariantError(
                    f"snoop profile key {name!r} does not match mode_name {prof.mode_name!r}")
            if prof.mode_name == "DIR" and self.numa_domains_per_chip != 2:
                raise InvariantError(
                    "a DIR snoop profile requires numa_domains_per_chip = 2")
        # Table-style combined path widths and per-unit ports are recorded
        # redundantly; they must agree
        l1 = self.cache_levels[0]
        load_total = self.ports.load_units.count * self.ports.load_units.width_bytes_per_cycle
        store_total = self.ports.store_units.count * self.ports.store_units.width_bytes_per_cycle
        if abs(load_total - l1.load_path_bytes_per_cycle) > 1e-9:
            raise InvariantError(
                f"ports.load_units ({load_total} B/cy total) disagree with "
                f"{l1.level_name}.load_path_bytes_per_cycle ({l1.load_path_bytes_per_cycle})")
        if abs(store_total - l1.store_path_bytes_per_cycle) > 1e-9:
            raise InvariantError(
                f"ports.store_units ({store_total} B/cy total) disagree with "
                f"{l1.level_name}.store_path_bytes_per_cycle ({l1.store_path_bytes_per_cycle})")
        if self.ports.store_units.count == 1:
            expected_avx_store = max(
                1.0, 32.0 / self.ports.store_units.width_bytes_per_cycle)
            if abs(self.ports.avx_store_cycles - expected_avx_store) > 1e-9:
                raise InvariantError(
                    f"ports.avx_store_cycles ({self.ports.avx_store_cycles}) "
                    f"disagrees with the store unit width "
                    f"(expected {expected_avx_store})")

    # -- queries ----------------------------------------------------------

    def lookup_instruction(self, mnemonic: str, width: str, precision: str) -> InstSpec:
        """Exact (mnemonic, width, precision) lookup, no fuzzy matching."""
        inst = self._index.get((mnemonic, width, precision))
        if inst is None:
            import difflib
            mnemonics = sorted({i.mnemonic for i in self.instruction_table})
            near = difflib.get_close_matches(mnemonic, mnemonics, n=3, cutoff=0.0)
            raise LookupError_(
                f"no instruction ({mnemonic}, {width}, {precision}) in {self.name}", near)
        return inst

    def has_instruction(self, mnemonic: str, width: str, precision: str) -> bool:
        return (mnemonic, width, precision) in self._index

    def effective_frequency(self, workload_class: str, mode: str = "guaranteed") -> float:
        """Clock the chip guarantees (or can reach) for a workload class.

        AVX code falls back to the plain base/turbo values on chips without a
        separate AVX license; turbo values fall back to the guaranteed ones.
        """
        if workload_class not in ("scalar", "sse", "avx"):
            raise InvariantError(f"unknown workload class {workload_class!r}")
        if mode not in ("guaranteed", "max_all_core"):
            raise InvariantError(f"unknown frequency mode {mode!r}")
        f = self.frequency
        if workload_class == "avx":
            guaranteed = f.avx_base_hz if f.avx_base_hz is not None else f.base_hz
            turbo = f.avx_all_core_turbo_hz
        else:
            guaranteed = f.base_hz
            turbo = f.max_all_core_turbo_hz
        if mode == "guaranteed":
            return guaranteed
        return turbo if turbo is not None else guaranteed

    def level_names(self) -> list[str]:
        return [lv.level_name for lv in self.cache_levels]

    def level(self, name: str) -> CacheLevelSpec:
        for lv in self.cache_levels:
            if lv.level_name == name:
                return lv
        raise LookupError_(f"no cache level {name!r} in {self.name}", self.level_names())
