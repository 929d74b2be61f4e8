"""Executor abstraction and measurement result types.

Probes run through an executor: either the real host (capability-gated) or a
synthetic one that models timings from a machine description.  Results are
immutable records carrying the raw repetitions, the chosen statistic, and a
full environment fingerprint.
"""

import statistics
from dataclasses import dataclass, field

from ..errors import CapabilityError, InvariantError, MeasurementError

CAPABILITIES = frozenset({
    "cycle_counter", "fixed_counters", "energy_counter",
    "uncore_clamp", "prefetcher_toggle", "core_pinning",
})

DEFAULT_REPETITIONS = 21
WARMUP_RUNS = 2
MIN_REPETITIONS = 9


@dataclass(frozen=True)
class NoiseModel:
    """One-sided multiplicative jitter applied per repetition.

    Measurement noise only ever adds time, so time-like values are scaled by
    1 + U(0, jitter) and rate-like values divided by it.  Seeded runs are
    bit-reproducible.
    """

    relative_jitter: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.relative_jitter <= 0.2:
            raise InvariantError("noise relative_jitter must be within [0, 0.2]")

    def time_factor(self, rng) -> float:
        if self.relative_jitter == 0.0:
            return 1.0
        return 1.0 + rng.uniform(0.0, self.relative_jitter)


@dataclass(frozen=True)
class Environment:
    """Conditions a measurement ran under; recorded, never assumed."""

    core_freq_hz: float
    uncore_freq_hz: float | None = None
    prefetchers_on: bool = True
    pinned_cores: tuple[int, ...] = ()
    snoop_mode: str | None = None


@dataclass(frozen=True)
class ProbeResult:
    probe_name: str
    parameters: dict
    repetitions: tuple[float, ...]
    statistic: str  # min | median
    value: float
    unit: str
    environment: Environment
    machine: str | None = None
    extra_values: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.repetitions) < MIN_REPETITIONS:
            raise InvariantError(
                f"probe {self.probe_name}: needs >= {MIN_REPETITIONS} repetitions")
        if self.statistic not in ("min", "median"):
            raise InvariantError(f"probe {self.probe_name}: unknown statistic")
        expected = (min(self.repetitions) if self.statistic == "min"
                    else statistics.median(self.repetitions))
        if abs(expected - self.value) > 1e-9 * max(1.0, abs(expected)):
            raise InvariantError(
                f"probe {self.probe_name}: value {self.value} does not equal the "
                f"{self.statistic} of its repetitions ({expected})")


def make_result(probe_name: str, parameters: dict, repetitions: list[float],
                statistic: str, unit: str, environment: Environment,
                machine: str | None = None,
                extra_values: dict[str, float] | None = None) -> ProbeResult:
    value = min(repetitions) if statistic == "min" else statistics.median(repetitions)
    result = ProbeResult(
        probe_name=probe_name, parameters=parameters,
        repetitions=tuple(repetitions), statistic=statistic, value=value,
        unit=unit, environment=environment, machine=machine,
        extra_values=extra_values or {})
    result.validate()
    return result


@dataclass(frozen=True)
class SweepPoint:
    requested_core_freq_hz: float | None  # None = turbo
    requested_uncore_freq_hz: float | None
    cores: int
    performance: float
    unit: str
    package_energy_joules: float
    duration_s: float
    observed_core_freq_hz: float
    observed_uncore_freq_hz: float | None


@dataclass(frozen=True)
class SweepResult:
    workload: str
    machine: str | None
    core_freq_axis: tuple[float | None, ...]
    uncore_freq_axis: tuple[float | None, ...]
    cores_axis: tuple[int, ...]
    points: tuple[SweepPoint, ...]
    seed: int | None = None


class Executor:
    """Common executor interface; see SyntheticExecutor and RealExecutor."""

    kind: str = "abstract"
    capabilities: frozenset = frozenset()

    def require(self, capability: str, probe_name: str) -> None:
        if capability not in CAPABILITIES:
            raise InvariantError(f"unknown capability {capability!r}")
        if capability not in self.capabilities:
            raise CapabilityError(
                f"{probe_name} requires the {capability!r} capability, which the "
                f"{self.kind} executor does not have here")


def derive_l2_bandwidth(total_cycles: float, load_retire_cycles: float,
                        bytes_transferred: float) -> float:
    """Effective L2 link bandwidth from raw runtime counters.

    The modeled chips transfer no cache lines between L2 and L1 in cycles
    that retire a load, so the transfer time is the runtime minus the
    load-retire cycles; the bandwidth is the bytes moved over that window.
    """
    if bytes_transferred <= 0:
        raise MeasurementError("bytes_transferred must be > 0")
    if load_retire_cycles > total_cycles:
        raise MeasurementError(
            f"load_retire_cycles ({load_retire_cycles}) exceeds total_cycles "
            f"({total_cycles}); inputs are inconsistent")
    window = total_cycles - load_retire_cycles
    if window <= 0:
        raise MeasurementError(
            "non-positive transfer window (total_cycles == load_retire_cycles); "
            "the inputs cannot be a valid in-L2 run")
    return bytes_transferred / window
