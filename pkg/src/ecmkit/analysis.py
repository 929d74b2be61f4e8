"""Result analysis: scaling efficiency, saturation, energy, and
measurement-versus-prediction comparison."""

from dataclasses import dataclass

from .ecm import EcmPrediction
from .errors import InvariantError, UnitMismatchError
from .probes.base import ProbeResult


@dataclass(frozen=True)
class ScalingSeries:
    """(cores, bandwidth) points, ascending cores, 1-core point required."""

    points: tuple[tuple[int, float], ...]

    def validate(self) -> None:
        if not self.points:
            raise InvariantError("scaling series is empty")
        cores = [n for n, _ in self.points]
        if cores[0] != 1:
            raise InvariantError("scaling series must include a 1-core point")
        if any(b <= 0 for _, b in self.points):
            raise InvariantError("scaling series bandwidths must be > 0")
        if any(a >= b for a, b in zip(cores, cores[1:])):
            raise InvariantError("scaling series cores must strictly increase")

    @classmethod
    def from_pairs(cls, pairs) -> "ScalingSeries":
        series = cls(points=tuple((int(n), float(b)) for n, b in pairs))
        series.validate()
        return series


@dataclass(frozen=True)
class EfficiencyReport:
    parallel_efficiency: float
    saturation_core_count: int
    per_point_efficiency: tuple[tuple[int, float], ...]
    superlinear: bool

    def validate(self) -> None:
        if not 0 < self.parallel_efficiency <= 1.5:
            raise InvariantError(
                f"parallel efficiency {self.parallel_efficiency} outside (0, 1.5]")


def parallel_efficiency(series: ScalingSeries) -> float:
    """Bandwidth at full core count over ideal linear scaling of one core."""
    series.validate()
    n_max, b_max = series.points[-1]
    _, b1 = series.points[0]
    return b_max / (n_max * b1)


def saturation_point(series: ScalingSeries, epsilon: float = 0.02) -> int:
    """Smallest core count reaching within epsilon of the series maximum."""
    series.validate()
    if not 0 < epsilon <= 0.2:
        raise InvariantError("epsilon must be in (0, 0.2]")
    peak = max(b for _, b in series.points)
    for n, b in series.points:
        if b >= (1.0 - epsilon) * peak:
            return n
    return series.points[-1][0]


def efficiency_report(series: ScalingSeries, epsilon: float = 0.02) -> EfficiencyReport:
    series.validate()
    _, b1 = series.points[0]
    per_point = tuple((n, b / (n * b1)) for n, b in series.points)
    report = EfficiencyReport(
        parallel_efficiency=parallel_efficiency(series),
        saturation_core_count=saturation_point(series, epsilon),
        per_point_efficiency=per_point,
        superlinear=any(e > 1.0 + 1e-9 for _, e in per_point),
    )
    report.validate()
    return report


@dataclass(frozen=True)
class EnergyReport:
    performance: float
    performance_unit: str
    package_power_watts: float
    efficiency_per_watt: float
    core_freq_hz: float | None
    uncore_freq_hz: float | None

    def validate(self) -> None:
        if self.package_power_watts <= 0:
            raise InvariantError("package power must be > 0")
        expected = self.performance / self.package_power_watts
        if abs(expected - self.efficiency_per_watt) > 1e-9 * max(1.0, abs(expected)):
            raise InvariantError("efficiency must equal performance / power exactly")


def energy_metrics(performance: float, unit: str, energy_joules: float,
                   duration_s: float, core_freq_hz: float | None = None,
                   uncore_freq_hz: float | None = None) -> EnergyReport:
    """Power and performance-per-watt for one operating point.

    Units are reported exactly as declared by the workload and never
    rescaled."""
    if duration_s <= 0:
        raise InvariantError("duration_s must be > 0")
    power = energy_joules / duration_s
    if power <= 0:
        raise InvariantError("energy and duration imply non-positive power")
    report = EnergyReport(
        performance=performance, performance_unit=unit,
        package_power_watts=power,
        efficiency_per_watt=performance / power,
        core_freq_hz=core_freq_hz, uncore_freq_hz=uncore_freq_hz,
    )
    report.validate()
    return report


@dataclass(frozen=True)
class DeviationReport:
    measured: float
    predicted: float
    unit: str
    absolute_deviation: float
    relative_deviation: float  # signed, (measured - predicted) / predicted
    tolerance: float | None
    passed: bool | None


_BANDWIDTH_UNITS = {"B/cy", "GB/s"}


def compare_prediction(probe: ProbeResult, prediction: EcmPrediction,
                       tolerance: float | None = None) -> DeviationReport:
    """Signed deviation of a measurement from its model prediction.

    Bandwidth units are reconciled through the prediction's stated frequency;
    anything else must match the probe's unit exactly.
    """
    measured = probe.value
    unit = probe.unit
    if unit == "B/cy":
        predicted = prediction.predicted_bandwidth_bytes_per_cycle
    elif unit == "GB/s":
        predicted = prediction.predicted_bandwidth_bytes_per_s / 1e9
    elif unit in ("cy/it", "cy/iteration"):
        predicted = prediction.composed_cycles_per_iteration
    else:
        raise UnitMismatchError(
            f"cannot compare probe unit {unit!r} against an ECM prediction "
            "(comparable: B/cy, GB/s, cy/it)")
    if predicted == 0:
        raise UnitMismatchError("prediction is zero; relative deviation undefined")
    absolute = measured - predicted
    relative = absolute / predicted
    passed = None if tolerance is None else abs(relative) <= tolerance
    return DeviationReport(
        measured=measured, predicted=predicted, unit=unit,
        absolute_deviation=absolute, relative_deviation=relative,
        tolerance=tolerance, passed=passed,
    )


def series_from_probe_results(results: list[ProbeResult]) -> ScalingSeries:
    """Build a scaling series from bandwidth probe results (cores axis)."""
    pairs = []
    for r in results:
        if r.probe_name != "bandwidth":
            raise InvariantError(f"expected bandwidth results, got {r.probe_name!r}")
        cores = r.parameters.get("cores")
        value = r.extra_values.get("GB/s", r.value)
        pairs.append((cores, value))
    pairs.sort(key=lambda p: p[0])
    return ScalingSeries.from_pairs(pairs)


def find_knee(points: list[tuple[float, float]], flat_fraction: float = 0.98) -> float:
    """Smallest x whose y reaches flat_fraction of the maximum; for sweep
    curves that rise and then flatten."""
    if not points:
        raise InvariantError("empty curve")
    peak = max(y for _, y in points)
    for x, y in sorted(points):
        if y >= flat_fraction * peak:
            return x
    return sorted(points)[-1][0]
