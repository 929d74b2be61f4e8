import pytest

from ecmkit import (
    NoiseModel,
    SyntheticConfig,
    SyntheticExecutor,
    builtin_kernel,
    derive_l2_bandwidth,
)
from ecmkit.errors import InvariantError, MeasurementError

from golden import L2_BANDWIDTHS

KB = 1024
MB = 1024 * 1024


def _exec(md, jitter=0.0, seed=0, **config):
    return SyntheticExecutor(md, NoiseModel(jitter, seed), SyntheticConfig(**config))


# -- latency -----------------------------------------------------------------------

def test_latency_ladder_bdw(bdw):
    ex = _exec(bdw, cod=True)
    assert ex.run_latency_probe(10 * KB).value == 4
    assert ex.run_latency_probe(100 * KB).value == 12
    assert ex.run_latency_probe(10 * MB).value == 41
    assert _exec(bdw, snoop_mode="DIR").run_latency_probe(1 << 30).value == 178


def test_latency_cod_off_vs_on(bdw):
    assert _exec(bdw, cod=False).run_latency_probe(20 * MB).value == 47
    assert _exec(bdw, cod=True).run_latency_probe(20 * MB).value == 41


def test_latency_snoop_modes(bdw):
    for mode, expected in (("ES", 248), ("HS", 280), ("HS_OSB", 190), ("DIR", 178)):
        assert _exec(bdw, snoop_mode=mode).run_latency_probe(1 << 30).value == expected


def test_latency_ladder_monotone_all_machines(machines):
    sizes = [4 * KB, 16 * KB, 64 * KB, 128 * KB, 1 * MB, 8 * MB, 256 * MB, 1 << 30]
    for md in machines.values():
        ex = _exec(md)
        values = [ex.run_latency_probe(ws).value for ws in sizes]
        assert values == sorted(values), md.name


def test_latency_probe_fingerprint_and_stats(bdw):
    result = _exec(bdw, jitter=0.05, seed=3).run_latency_probe(10 * KB)
    assert result.statistic == "min"
    assert result.value == min(result.repetitions)
    assert len(result.repetitions) == 21
    assert result.environment.prefetchers_on is False
    assert result.environment.core_freq_hz == 2.3e9
    result.validate()


def test_latency_requires_two_lines(bdw):
    with pytest.raises(InvariantError):
        _exec(bdw).run_latency_probe(64)


def test_unknown_snoop_mode_rejected(snb):
    with pytest.raises(InvariantError):
        _exec(snb, snoop_mode="DIR")


# -- instructions --------------------------------------------------------------------

def test_instruction_probe_examples(bdw):
    ex = _exec(bdw)
    assert ex.run_instruction_probe("div", "avx", "dp", "latency").value == 24
    assert ex.run_instruction_probe("div", "scalar", "dp", "throughput").value == 4.5


def test_single_chain_degenerates_to_latency(machines):
    for md in machines.values():
        ex = _exec(md)
        for inst in md.instruction_table[:6]:
            lat = ex.run_instruction_probe(inst.mnemonic, inst.width,
                                           inst.precision, "latency").value
            tp1 = ex.run_instruction_probe(inst.mnemonic, inst.width,
                                           inst.precision, "throughput",
                                           chains=1).value
            assert lat == tp1


def test_round_trip_all_instructions_zero_noise(machines):
    for md in machines.values():
        ex = _exec(md)
        for inst in md.instruction_table:
            lat = ex.run_instruction_probe(inst.mnemonic, inst.width,
                                           inst.precision, "latency")
            tp = ex.run_instruction_probe(inst.mnemonic, inst.width,
                                          inst.precision, "throughput", chains=64)
            assert lat.value == inst.latency_cycles
            assert tp.value == inst.inverse_throughput_cycles


def test_round_trip_with_jitter_within_bound(bdw):
    ex = _exec(bdw, jitter=0.05, seed=11)
    for inst in bdw.instruction_table:
        measured = ex.run_instruction_probe(inst.mnemonic, inst.width,
                                            inst.precision, "latency").value
        assert abs(measured - inst.latency_cycles) / inst.latency_cycles <= 0.05


# -- bandwidth ------------------------------------------------------------------------

def test_bandwidth_in_l1_triad(bdw, snb):
    assert _exec(bdw).run_bandwidth_probe(
        builtin_kernel("triad"), 10 * KB).value == pytest.approx(64.0)
    assert _exec(snb).run_bandwidth_probe(
        builtin_kernel("triad"), 10 * KB).value == pytest.approx(48.0)


def test_bandwidth_reports_both_units(bdw):
    result = _exec(bdw).run_bandwidth_probe(builtin_kernel("triad"), 10 * KB)
    assert result.unit == "B/cy"
    assert result.statistic == "median"
    assert "GB/s" in result.extra_values
    f = result.environment.core_freq_hz
    assert result.extra_values["GB/s"] == pytest.approx(result.value * f / 1e9)


def test_l3_parallel_efficiency_hsw(hsw):
    kd = builtin_kernel("triad")
    ws = 8 * MB
    cod = _exec(hsw, cod=True)
    single = cod.run_bandwidth_probe(kd, ws, 1).extra_values["GB/s"]
    full = cod.run_bandwidth_probe(kd, ws, 14).extra_values["GB/s"]
    assert full / (14 * single) == pytest.approx(0.98, abs=0.005)
    noncod = _exec(hsw, cod=False)
    full_nc = noncod.run_bandwidth_probe(kd, ws, 14).extra_values["GB/s"]
    assert full_nc / (14 * single) == pytest.approx(0.92, abs=0.005)


def test_memory_bandwidth_saturates(bdw):
    kd = builtin_kernel("triad")
    ex = _exec(bdw)
    values = [ex.run_bandwidth_probe(kd, 1 << 30, n).extra_values["GB/s"]
              for n in (1, 2, 4, 8, 18)]
    assert values == sorted(values)
    app_cap = 62.0 * 96 / 128  # sustained bus rate in application bytes
    assert values[-1] == pytest.approx(app_cap, rel=0.01)


def test_oversubscription_rejected(bdw):
    with pytest.raises(InvariantError):
        _exec(bdw).run_bandwidth_probe(builtin_kernel("triad"), 10 * KB, cores=19)


def test_bandwidth_jitter_direction(bdw):
    # noise adds time, so jittered bandwidth never exceeds the true value
    clean = _exec(bdw).run_bandwidth_probe(builtin_kernel("triad"), 10 * KB).value
    noisy = _exec(bdw, jitter=0.1, seed=5).run_bandwidth_probe(
        builtin_kernel("triad"), 10 * KB)
    assert max(noisy.repetitions) <= clean + 1e-9
    assert noisy.value >= clean / 1.1 - 1e-9


# -- L2 derivation ----------------------------------------------------------------------

def test_derive_l2_bandwidth_arithmetic():
    assert derive_l2_bandwidth(100, 60, 1600) == pytest.approx(40.0)


def test_derive_l2_bandwidth_degenerate_inputs():
    with pytest.raises(MeasurementError):
        derive_l2_bandwidth(50, 50, 3200)
    with pytest.raises(MeasurementError):
        derive_l2_bandwidth(50, 60, 3200)
    with pytest.raises(MeasurementError):
        derive_l2_bandwidth(50, 10, 0)


@pytest.mark.parametrize("kernel_name", ("dot", "triad"))
def test_l2_derivation_reproduces_measured_bandwidths(kernel_name, machines):
    for name, md in machines.items():
        counters = _exec(md).l2_run_counters(builtin_kernel(kernel_name))
        derived = derive_l2_bandwidth(
            counters["total_cycles"], counters["load_retire_cycles"],
            counters["bytes_transferred"])
        expected = L2_BANDWIDTHS[kernel_name][name]
        assert derived == pytest.approx(expected, rel=0.02), (name, kernel_name)


# -- gather -------------------------------------------------------------------------------

def test_gather_probe_examples(machines):
    assert _exec(machines["hsw"]).run_gather_probe("L1", 1).value == 12.3
    assert _exec(machines["bdw"]).run_gather_probe("MEM", 8).value == 94.4


def test_gather_spread_sweep_monotone_under_jitter(bdw):
    ex = _exec(bdw, jitter=0.05, seed=9)
    values = [ex.run_gather_probe("L2", s).value for s in (1, 2, 4, 8)]
    assert values == sorted(values)


def test_gather_working_set_lands_in_requested_level(bdw):
    from ecmkit.kernels import residence_level
    ex = _exec(bdw)
    for level in ("L1", "L2", "L3"):
        ws = ex.run_gather_probe(level, 1).parameters["working_set_bytes"]
        assert residence_level(bdw, ws) == level
    ws = ex.run_gather_probe("MEM", 1).parameters["working_set_bytes"]
    assert residence_level(bdw, ws) == "MEM"


def test_gather_bad_spread(bdw):
    with pytest.raises(InvariantError):
        _exec(bdw).run_gather_probe("L2", 3)


def test_gather_missing_table(snb):
    from ecmkit.errors import LookupError_
    with pytest.raises(LookupError_):
        _exec(snb).run_gather_probe("L2", 2)


# -- noise / determinism --------------------------------------------------------------------

def test_seeded_probes_bit_reproducible(bdw):
    a = _exec(bdw, jitter=0.08, seed=123).run_latency_probe(10 * KB)
    b = _exec(bdw, jitter=0.08, seed=123).run_latency_probe(10 * KB)
    assert a.repetitions == b.repetitions


def test_noise_model_bounds():
    with pytest.raises(InvariantError):
        NoiseModel(0.5).validate()
    NoiseModel(0.2).validate()


# -- attained frequencies ---------------------------------------------------------------------

def test_observed_frequency_bdw_avx_above_both_bases(bdw):
    obs = _exec(bdw).observe_effective_frequency(workload_class="avx")
    attained = obs["core_hz"][0]
    assert attained >= 2.3e9  # non-AVX base
    assert attained >= 2.0e9  # AVX base
    assert attained <= 2.7e9


def test_observed_frequency_hsw_between_avx_base_and_base(hsw):
    obs = _exec(hsw).observe_effective_frequency(workload_class="avx")
    attained = obs["core_hz"][0]
    assert 1.9e9 < attained < 2.3e9


def test_observed_frequency_idle_request_honored(bdw):
    ex = _exec(bdw, core_freq_request_hz=2.3e9)
    obs = ex.observe_effective_frequency(workload_class="idle")
    assert obs["core_hz"][0] == 2.3e9


def test_observed_frequency_sse_reaches_turbo(bdw, hsw):
    assert _exec(bdw).observe_effective_frequency(
        workload_class="sse")["core_hz"][0] == pytest.approx(2.8e9)
    hsw_sse = _exec(hsw).observe_effective_frequency(
        workload_class="sse")["core_hz"][0]
    assert 2.5e9 < hsw_sse < 2.7e9  # just below the 2.7 turbo ceiling
