import pytest

from ecmkit import (
    NoiseModel,
    SyntheticConfig,
    SyntheticExecutor,
    builtin_kernel,
    compare_prediction,
    energy_metrics,
    parallel_efficiency,
    predict,
    saturation_point,
)
from ecmkit.analysis import (
    ScalingSeries,
    efficiency_report,
    find_knee,
    series_from_probe_results,
)
from ecmkit.errors import InvariantError, UnitMismatchError


def _series(*pairs):
    return ScalingSeries.from_pairs(pairs)


# -- parallel efficiency -----------------------------------------------------------

def test_efficiency_quoted_values():
    assert parallel_efficiency(_series((1, 10), (14, 128.8))) == pytest.approx(0.92)
    assert parallel_efficiency(_series((1, 10), (18, 154.8))) == pytest.approx(0.86)
    assert parallel_efficiency(_series((1, 10), (2, 20))) == pytest.approx(1.0)


def test_series_requires_one_core_point():
    with pytest.raises(InvariantError):
        _series((2, 20), (4, 40))


def test_series_strictly_increasing_cores():
    with pytest.raises(InvariantError):
        _series((1, 10), (1, 12))


def test_superlinear_flagged():
    report = efficiency_report(_series((1, 10), (2, 25)))
    assert report.superlinear
    assert report.parallel_efficiency <= 1.5


# -- saturation ---------------------------------------------------------------------

def test_saturation_scan():
    series = _series((1, 10), (2, 20), (3, 30), (4, 40), (5, 50), (6, 60),
                     (7, 62), (8, 62), (9, 62))
    assert saturation_point(series) == 7


def test_saturation_linear_series_never_flattens():
    series = _series(*[(n, 10.0 * n) for n in range(1, 9)])
    assert saturation_point(series) == 8


def test_saturation_flat_series_is_one():
    series = _series(*[(n, 50.0) for n in range(1, 9)])
    assert saturation_point(series) == 1


def test_saturation_epsilon_bounds():
    with pytest.raises(InvariantError):
        saturation_point(_series((1, 10), (2, 20)), epsilon=0.5)


def test_model_series_below_cap_is_perfectly_efficient(bdw):
    # the scaling model's points before the sustained cap binds scale
    # linearly, so their parallel efficiency is exactly 1
    from ecmkit import scaling_prediction
    pred = predict(builtin_kernel("triad"), 1 << 30, bdw)
    scaling = scaling_prediction(pred, bdw)
    uncapped = [(n, bw) for n, bw in scaling.points
                if bw < scaling.saturated_bandwidth_bytes_per_s - 1e-6]
    series = _series(*uncapped)
    assert parallel_efficiency(series) == 1.0


# -- energy ------------------------------------------------------------------------

def test_energy_simple():
    report = energy_metrics(100.0, "GFLOP/s", energy_joules=500.0, duration_s=10.0)
    assert report.package_power_watts == pytest.approx(50.0)
    assert report.efficiency_per_watt == pytest.approx(2.0)


def test_energy_quoted_efficiency_drop():
    # the published operating points: same performance, two uncore clocks
    high_uncore = energy_metrics(24_000, "MFLOP/s", energy_joules=371.0,
                                 duration_s=1.0, uncore_freq_hz=2.8e9)
    tuned = energy_metrics(24_000, "MFLOP/s", energy_joules=275.2,
                           duration_s=1.0, uncore_freq_hz=2.0e9)
    assert high_uncore.efficiency_per_watt == pytest.approx(64.7, abs=0.05)
    assert tuned.efficiency_per_watt == pytest.approx(87.2, abs=0.05)
    drop = (tuned.efficiency_per_watt - high_uncore.efficiency_per_watt) \
        / tuned.efficiency_per_watt
    assert drop == pytest.approx(0.26, abs=0.005)


def test_energy_best_operating_point():
    report = energy_metrics(459.2, "GFLOP/s", energy_joules=80.0, duration_s=1.0,
                            core_freq_hz=1.6e9, uncore_freq_hz=1.2e9)
    assert report.efficiency_per_watt == pytest.approx(5.74, abs=0.005)


def test_energy_scale_consistency():
    a = energy_metrics(100.0, "GB/s", 500.0, 10.0)
    b = energy_metrics(100.0, "GB/s", 1000.0, 20.0)
    assert a.package_power_watts == b.package_power_watts
    assert a.efficiency_per_watt == b.efficiency_per_watt


def test_energy_rejects_bad_duration():
    with pytest.raises(InvariantError):
        energy_metrics(1.0, "x", 1.0, 0.0)


# -- comparison ---------------------------------------------------------------------

def _bw_probe(md, value_unit="B/cy"):
    ex = SyntheticExecutor(md, NoiseModel(), SyntheticConfig())
    return ex.run_bandwidth_probe(builtin_kernel("dot"), 100 * 1024)


def test_compare_derated_link_zero_deviation(bdw):
    probe = _bw_probe(bdw)
    pred = predict(builtin_kernel("dot"), 100 * 1024, bdw)
    report = compare_prediction(probe, pred, tolerance=0.01)
    assert report.relative_deviation == pytest.approx(0.0, abs=1e-9)
    assert report.passed is True


def test_compare_hundred_percent():
    from ecmkit.probes.base import Environment, make_result
    from ecmkit import load_machine
    bdw = load_machine("bdw")
    pred = predict(builtin_kernel("triad"), 8192, bdw)  # 64 B/cy
    probe = make_result("bandwidth", {}, [128.0] * 9, "median", "B/cy",
                        Environment(core_freq_hz=2.3e9))
    report = compare_prediction(probe, pred)
    assert report.relative_deviation == pytest.approx(1.0)
    assert report.passed is None


def test_compare_unit_mismatch(bdw):
    from ecmkit.probes.base import Environment, make_result
    pred = predict(builtin_kernel("triad"), 8192, bdw)
    probe = make_result("latency", {}, [4.0] * 9, "min", "cy/access",
                        Environment(core_freq_hz=2.3e9))
    with pytest.raises(UnitMismatchError):
        compare_prediction(probe, pred)


def test_compare_tolerance_failure(bdw):
    from ecmkit.probes.base import Environment, make_result
    pred = predict(builtin_kernel("triad"), 8192, bdw)
    probe = make_result("bandwidth", {}, [80.0] * 9, "median", "B/cy",
                        Environment(core_freq_hz=2.3e9))
    report = compare_prediction(probe, pred, tolerance=0.05)
    assert report.passed is False


# -- series from probes ----------------------------------------------------------------

def test_series_from_bandwidth_probes(hsw):
    ex = SyntheticExecutor(hsw, NoiseModel(), SyntheticConfig(cod=True))
    results = [ex.run_bandwidth_probe(builtin_kernel("triad"), 8 * 1024 * 1024, n)
               for n in (1, 2, 4, 8, 14)]
    series = series_from_probe_results(results)
    assert parallel_efficiency(series) == pytest.approx(0.98, abs=0.005)


def test_find_knee():
    points = [(1.2, 10.0), (1.4, 12.0), (1.6, 14.0), (1.8, 16.0),
              (2.0, 16.1), (2.2, 16.1)]
    assert find_knee(points) == 1.8
