"""Machine simulator executor.

Computes probe outcomes from a machine description instead of running code:
latencies come from the hierarchy's latency tables, instruction timings from
the instruction table, bandwidths from the analytic model with multicore
scaling and sustained-bandwidth caps, and frequencies from a package power
budget shared between cores and uncore.  A seeded noise model adds
reproducible one-sided jitter; with zero jitter every probe returns table
values exactly, which is what makes desk-scale round-trip testing possible.
"""

import random
import statistics
from dataclasses import dataclass

from ..ecm import predict, predict_gather
from ..errors import CapabilityError, InvariantError
from ..kernels import KernelDescriptor, residence_level, traffic_profile
from ..machine.types import MachineDescription
from ..units import LINE_SIZE_BYTES
from .base import (
    CAPABILITIES,
    DEFAULT_REPETITIONS,
    Environment,
    Executor,
    NoiseModel,
    ProbeResult,
    SweepPoint,
    WARMUP_RUNS,
    make_result,
)
from .workloads import ExternalCommandWorkload, KernelWorkload, ProfileWorkload


@dataclass(frozen=True)
class SyntheticConfig:
    """Simulated platform configuration: BIOS-style knobs."""

    snoop_mode: str | None = None
    cod: bool | None = None  # None = follow the snoop mode / machine default
    core_freq_request_hz: float | None = None  # None = base frequency
    uncore_freq_request_hz: float | None = None  # None = uncore max (UFS-style)

    def cod_tag(self) -> str | None:
        if self.cod is True:
            return "cod_on"
        if self.cod is False:
            return "cod_off"
        if self.snoop_mode == "DIR":
            return "cod_on"  # DIR is the CoD snoop mode
        if self.snoop_mode is not None:
            return "cod_off"
        return None


class SyntheticExecutor(Executor):
    kind = "synthetic"
    capabilities = CAPABILITIES  # the simulator can "do" everything

    def __init__(self, md: MachineDescription,
                 noise: NoiseModel | None = None,
                 config: SyntheticConfig | None = None):
        self.md = md
        self.noise = noise or NoiseModel()
        self.noise.validate()
        self.config = config or SyntheticConfig()
        if (self.config.snoop_mode is not None
                and self.config.snoop_mode not in md.snoop_profiles
                and self.config.snoop_mode not in md.memory.latency_cycles):
            raise InvariantError(
                f"{md.name} has no snoop profile or latency entry for "
                f"{self.config.snoop_mode!r}")

    # -- helpers -----------------------------------------------------------

    def _reps(self, true_value: float, repetitions: int,
              rate_like: bool = False) -> list[float]:
        """Jittered repetitions; warm-up draws are taken and discarded.

        The factor sequence is a function of the noise seed alone, reset per
        probe: separate probes under one noise model see identical draws, so
        seeded comparisons across probes (ladders, spread sweeps) preserve
        the ordering of the true values, ties included.
        """
        rng = random.Random(self.noise.seed)
        values = []
        for i in range(repetitions + WARMUP_RUNS):
            factor = self.noise.time_factor(rng)
            values.append(true_value / factor if rate_like else true_value * factor)
        return values[WARMUP_RUNS:]

    def _environment(self, cores: int = 1, prefetchers_on: bool = True,
                     core_freq_hz: float | None = None,
                     uncore_freq_hz: float | None = None) -> Environment:
        return Environment(
            core_freq_hz=core_freq_hz if core_freq_hz is not None
            else (self.config.core_freq_request_hz or self.md.frequency.base_hz),
            uncore_freq_hz=uncore_freq_hz if uncore_freq_hz is not None
            else (self.config.uncore_freq_request_hz or self.md.frequency.uncore_max_hz),
            prefetchers_on=prefetchers_on,
            pinned_cores=tuple(range(cores)),
            snoop_mode=self.config.snoop_mode,
        )

    def _memory_latency(self) -> float:
        cfg = self.config
        if cfg.snoop_mode is not None:
            if cfg.snoop_mode in self.md.snoop_profiles:
                return self.md.snoop_profiles[cfg.snoop_mode].memory_latency_cycles
            return self.md.memory.latency(cfg.snoop_mode)
        if cfg.cod_tag() == "cod_on" and "DIR" in self.md.snoop_profiles:
            return self.md.snoop_profiles["DIR"].memory_latency_cycles
        return self.md.memory.latency()

    def _level_latency(self, level: str) -> float:
        if level == "MEM":
            return self._memory_latency()
        spec = self.md.level(level)
        tag = self.config.cod_tag()
        if (self.config.snoop_mode is not None
                and self.config.snoop_mode in self.md.snoop_profiles
                and level == self.md.cache_levels[-1].level_name):
            return self.md.snoop_profiles[self.config.snoop_mode].l3_latency_cycles
        return spec.latency(tag)

    # -- probes ------------------------------------------------------------

    def run_latency_probe(self, working_set_bytes: int,
                          repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Dependent chain walk latency, in base-frequency cycles per access.

        Measured with prefetchers off; the minimum over repetitions is
        reported since noise only ever adds time.  The synthetic walk does
        not materialize a chain; the value comes from the residence level's
        latency table under the configured CoD/snoop tags.
        """
        self.require("prefetcher_toggle", "latency probe")
        if working_set_bytes < 2 * LINE_SIZE_BYTES:
            raise InvariantError("latency probe needs at least two cache lines")
        level = residence_level(self.md, working_set_bytes)
        true_value = self._level_latency(level)
        reps = self._reps(true_value, repetitions)
        return make_result(
            "latency", {"working_set_bytes": working_set_bytes, "level": level},
            reps, "min", "cy/access",
            self._environment(prefetchers_on=False,
                              core_freq_hz=self.md.frequency.base_hz),
            machine=self.md.name)

    def run_instruction_probe(self, mnemonic: str, width: str, precision: str,
                              mode: str = "latency", chains: int = 8,
                              repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Serial-chain latency or k-chain inverse throughput, cycles/inst.

        One chain is fully serialized; k independent chains overlap until the
        issue rate, not the latency, limits: cycles = max(inverse throughput,
        latency / k).
        """
        if mode not in ("latency", "throughput"):
            raise InvariantError(f"unknown instruction probe mode {mode!r}")
        if chains < 1:
            raise InvariantError("chains must be >= 1")
        inst = self.md.lookup_instruction(mnemonic, width, precision)
        if mode == "latency":
            true_value = inst.latency_cycles
        else:
            true_value = max(inst.inverse_throughput_cycles,
                             inst.latency_cycles / chains)
        reps = self._reps(true_value, repetitions)
        return make_result(
            "instruction",
            {"mnemonic": mnemonic, "width": width, "precision": precision,
             "mode": mode, "chains": chains if mode == "throughput" else 1},
            reps, "min", "cy/inst",
            self._environment(core_freq_hz=self.md.frequency.base_hz),
            machine=self.md.name)

    def run_bandwidth_probe(self, kernel: KernelDescriptor, working_set_bytes: int,
                            cores: int = 1,
                            repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Streaming bandwidth for a kernel, median over repetitions.

        Single-core bandwidth comes from the composed model prediction;
        multiple cores scale it linearly through the private levels, by the
        shared level's parallel efficiency curve in the last-level cache, and
        against the sustained-bandwidth cap in memory.  Reported in B/cy at
        the observed core frequency, with GB/s alongside.

        Bandwidth runs model the pinned-clock procedure: the requested core
        clock (base, unless configured otherwise) holds, since streaming
        kernels sit below the dense-compute power envelope.  The package
        power interaction lives in sweeps and frequency observation.
        """
        if cores < 1 or cores > self.md.cores:
            raise InvariantError(
                f"cores must be within 1..{self.md.cores} for {self.md.name}")
        observed_core = self.config.core_freq_request_hz or self.md.frequency.base_hz
        observed_uncore = (self.config.uncore_freq_request_hz
                           or self.md.frequency.uncore_max_hz)
        pred = predict(kernel, working_set_bytes, self.md, cores=cores,
                       frequency_hz=observed_core,
                       snoop_mode=self.config.snoop_mode)
        single_app_bw_s = pred.predicted_bandwidth_bytes_per_s
        level = pred.residence_level
        if level == "MEM":
            app_per_bus = (pred.app_bytes_per_iteration
                           / pred.memory_bytes_per_iteration)
            sustained, _ = self.md.memory.sustained(kernel.pattern())
            if self.config.snoop_mode in self.md.snoop_profiles:
                sustained *= self.md.snoop_profiles[self.config.snoop_mode].scale(
                    kernel.pattern())
            if (self.md.memory.uncore_bytes_per_cycle and observed_uncore):
                sustained = min(sustained,
                                self.md.memory.uncore_bytes_per_cycle * observed_uncore)
            total_app_bw_s = min(cores * single_app_bw_s, sustained * app_per_bus)
        elif not self.md.level(level).per_core:
            efficiency = self._shared_level_efficiency(level, cores)
            total_app_bw_s = cores * single_app_bw_s * efficiency
        else:
            total_app_bw_s = cores * single_app_bw_s
        true_bw_cy = total_app_bw_s / observed_core
        reps = self._reps(true_bw_cy, repetitions, rate_like=True)
        extra = {"GB/s": statistics.median(reps) * observed_core / 1e9}
        return make_result(
            "bandwidth",
            {"kernel": kernel.name, "isa_width": kernel.isa_width,
             "working_set_bytes": working_set_bytes, "cores": cores,
             "level": level},
            reps, "median", "B/cy",
            self._environment(cores=cores, core_freq_hz=observed_core,
                              uncore_freq_hz=observed_uncore),
            machine=self.md.name, extra_values=extra)

    def _shared_level_efficiency(self, level: str, cores: int) -> float:
        """Parallel efficiency at *cores*, interpolated from perfect scaling
        at one core to the tabulated full-chip value."""
        spec = self.md.level(level)
        full = spec.parallel_efficiency.get(self.config.cod_tag() or "default")
        if full is None:
            full = spec.parallel_efficiency.get("default", 1.0)
        if self.md.cores == 1 or cores == 1:
            return 1.0
        return 1.0 - (1.0 - full) * (cores - 1) / (self.md.cores - 1)

    def run_gather_probe(self, source_level: str, cl_spread: int,
                         repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Cycles per gather instruction with data in *source_level* spread
        across *cl_spread* distinct lines; index buffers are sized to pin the
        working set into the level under the fill-factor rule."""
        if cl_spread not in (1, 2, 4, 8):
            raise InvariantError("cl_spread must be one of 1, 2, 4, 8")
        true_value = predict_gather(self.md, source_level, cl_spread)
        if source_level == "MEM":
            ws = 4 * self.md.cache_levels[-1].capacity_bytes
        else:
            spec = self.md.level(source_level)
            ws = int(spec.capacity_bytes * 0.4)
        reps = self._reps(true_value, repetitions)
        return make_result(
            "gather",
            {"source_level": source_level, "cl_spread": cl_spread,
             "working_set_bytes": ws},
            reps, "min", "cy/inst",
            self._environment(core_freq_hz=self.md.frequency.base_hz),
            machine=self.md.name)

    # -- L2 derivation raw inputs -------------------------------------------

    def l2_run_counters(self, kernel: KernelDescriptor,
                        iterations: int = 100000,
                        working_set_bytes: int | None = None) -> dict:
        """Raw counter readings of an in-L2 run, for derive_l2_bandwidth.

        total runtime follows the composed model; the load-retire window is
        the core-side data-path time, during which the L1 cannot exchange
        lines with L2.
        """
        l1 = self.md.cache_levels[0]
        l2 = self.md.cache_levels[1]
        if working_set_bytes is None:
            working_set_bytes = int(l2.capacity_bytes * 0.4)
        level = residence_level(self.md, working_set_bytes)
        if level != l2.level_name:
            raise InvariantError(
                f"working set {working_set_bytes} B does not reside in "
                f"{l2.level_name} (resolves to {level})")
        pred = predict(kernel, working_set_bytes, self.md)
        traffic = traffic_profile(kernel, working_set_bytes, self.md)
        link = f"{l1.level_name.lower()}_{l2.level_name.lower()}"
        bytes_per_iter = traffic.link(link).total_bytes
        jitter = self.noise.time_factor(random.Random(self.noise.seed))
        total = pred.composed_cycles_per_iteration * iterations * jitter
        load_retire = pred.in_core.t_data_path_cycles * iterations
        return {
            "total_cycles": total,
            "load_retire_cycles": load_retire,
            "bytes_transferred": bytes_per_iter * iterations,
            "working_set_bytes": working_set_bytes,
            "iterations": iterations,
        }

    # -- frequencies and power ----------------------------------------------

    def _attained_frequencies(self, workload_class: str,
                              cores: int) -> tuple[float, float | None]:
        cfg = self.config
        uncore = cfg.uncore_freq_request_hz
        freq = self.md.frequency
        if uncore is None:
            uncore = freq.uncore_max_hz
        if uncore is not None:
            lo = freq.uncore_min_hz or uncore
            hi = freq.uncore_max_hz or uncore
            uncore = min(max(uncore, lo), hi)
        core = self._tdp_core_frequency(workload_class, cores, uncore,
                                        cfg.core_freq_request_hz)
        return core, uncore

    def _tdp_core_frequency(self, workload_class: str, cores: int,
                            uncore_hz: float | None,
                            requested_hz: float | None) -> float:
        """Attained core clock under the package power budget.

        requested None means turbo: run as fast as the budget and the
        workload-class ceiling allow.  The class's guaranteed frequency is a
        floor; idle-class work is never power-limited.
        """
        freq = self.md.frequency
        if workload_class == "idle":
            return requested_hz if requested_hz is not None else freq.base_hz
        floor = self.md.effective_frequency(workload_class, "guaranteed")
        ceiling = self.md.effective_frequency(workload_class, "max_all_core")
        target = requested_hz if requested_hz is not None else ceiling
        target = min(target, ceiling)
        pm = freq.power_model
        if pm is not None:
            scale = 1.0 if workload_class == "avx" else pm.sse_power_scale
            budget = freq.tdp_watts - pm.idle_watts
            if uncore_hz is not None:
                budget -= pm.uncore_watts_per_ghz * uncore_hz / 1e9
            per_core = pm.core_watts_per_ghz_per_core * scale
            if per_core > 0 and cores > 0:
                tdp_hz = budget / (per_core * cores) * 1e9
                target = min(target, tdp_hz)
        return max(floor, min(target, ceiling))

    def package_power(self, workload_class: str, cores: int,
                      core_hz: float, uncore_hz: float | None) -> float:
        freq = self.md.frequency
        pm = freq.power_model
        if pm is None:
            return freq.tdp_watts
        scale = (1.0 if workload_class == "avx"
                 else pm.sse_power_scale if workload_class in ("sse", "scalar")
                 else 0.0)
        watts = pm.idle_watts + pm.core_watts_per_ghz_per_core * scale \
            * (core_hz / 1e9) * cores
        if uncore_hz is not None:
            watts += pm.uncore_watts_per_ghz * uncore_hz / 1e9
        return min(watts, freq.tdp_watts)

    def observe_effective_frequency(self, duration_s: float = 1.0,
                                    workload_class: str = "avx",
                                    cores: int | None = None) -> dict:
        """Attained per-core and uncore clocks for a workload class under the
        current configuration; sits between the class's guaranteed and turbo
        clocks when the power budget binds."""
        if cores is None:
            cores = self.md.cores
        core, uncore = self._attained_frequencies(workload_class, cores)
        return {"core_hz": [core] * cores, "uncore_hz": uncore,
                "duration_s": duration_s}

    # -- sweep points --------------------------------------------------------

    def run_sweep_point(self, workload, core_freq_hz: float | None,
                        uncore_freq_hz: float | None, cores: int,
                        dwell_s: float, rng: random.Random) -> SweepPoint:
        if isinstance(workload, ExternalCommandWorkload):
            raise CapabilityError(
                "external command workloads need the real executor")
        freq = self.md.frequency
        uncore = uncore_freq_hz
        if uncore is None:
            uncore = freq.uncore_max_hz
        if uncore is not None:
            lo = freq.uncore_min_hz or uncore
            hi = freq.uncore_max_hz or uncore
            uncore = min(max(uncore, lo), hi)
        wl_class = workload.workload_class
        core = self._tdp_core_frequency(wl_class, cores, uncore, core_freq_hz)

        if isinstance(workload, ProfileWorkload):
            perf = self._profile_performance(workload, cores, core, uncore)
            unit = workload.unit
        elif isinstance(workload, KernelWorkload):
            from ..kernels import load_kernel
            kd = load_kernel(workload.name, workload.isa_width)
            probe_exec = SyntheticExecutor(
                self.md, NoiseModel(0.0, 0),
                SyntheticConfig(snoop_mode=self.config.snoop_mode,
                                cod=self.config.cod,
                                core_freq_request_hz=core,
                                uncore_freq_request_hz=uncore))
            result = probe_exec.run_bandwidth_probe(
                kd, workload.working_set_bytes, cores, repetitions=9)
            perf = result.extra_values["GB/s"]
            unit = workload.unit
        else:
            raise InvariantError(f"unsupported workload type {type(workload).__name__}")

        perf *= 1.0 / self.noise.time_factor(rng)
        power = self.package_power(wl_class, cores, core, uncore)
        return SweepPoint(
            requested_core_freq_hz=core_freq_hz,
            requested_uncore_freq_hz=uncore_freq_hz,
            cores=cores,
            performance=perf,
            unit=unit,
            package_energy_joules=power * dwell_s,
            duration_s=dwell_s,
            observed_core_freq_hz=core,
            observed_uncore_freq_hz=uncore,
        )

    def _profile_performance(self, profile: ProfileWorkload, cores: int,
                             core_hz: float, uncore_hz: float | None) -> float:
        """min(compute roof, data roof) in GFLOP/s."""
        compute = cores * profile.flops_per_cycle_per_core * core_hz / 1e9
        sustained, _ = self.md.memory.sustained("default")
        if self.md.memory.uncore_bytes_per_cycle and uncore_hz:
            sustained = min(sustained,
                            self.md.memory.uncore_bytes_per_cycle * uncore_hz)
        data = profile.arithmetic_intensity_flops_per_byte * sustained / 1e9
        return min(compute, data)
