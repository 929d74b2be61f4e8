import pytest
from hypothesis import given, settings, strategies as st

from ecmkit import (
    agu_bound,
    builtin_kernel,
    compose,
    ecm_notation,
    incore_time,
    predict,
    predict_gather,
    scaling_prediction,
    traffic_profile,
    transfer_times,
)
from ecmkit.ecm import InCoreTime, TransferTimes, lower_kernel
from ecmkit.errors import InvariantError, LookupError_

from oracles import PortSimulator, port_config_from_machine, triad_ops

KB = 1024


# -- in-core time -----------------------------------------------------------------

def test_triad_snb_two_cycles(snb):
    ic = incore_time(builtin_kernel("triad"), snb)
    assert ic.per_port_cycles["load"] == 2.0   # AVX loads block both units
    assert ic.per_port_cycles["store"] == 2.0  # 32 B over a 16 B store path
    assert ic.t_agu_cycles == 1.5
    assert ic.t_throughput_cycles_per_iteration == 2.0


def test_triad_bdw_agu_bound(bdw):
    ic = incore_time(builtin_kernel("triad"), bdw)
    assert ic.t_agu_cycles == 1.5
    assert ic.t_throughput_cycles_per_iteration == 1.5
    assert ic.per_port_cycles["load"] == 1.0


def test_triad_lea_bdw_retire_bound(bdw):
    ic = incore_time(builtin_kernel("triad_lea"), bdw)
    assert ic.t_agu_cycles == 1.0  # stores moved to the simple AGU
    assert ic.t_retire_cycles == 1.25
    assert ic.t_throughput_cycles_per_iteration == 1.25


def test_triad_noarith_bdw_hits_one_cycle(bdw):
    ic = incore_time(builtin_kernel("triad_noarith"), bdw)
    assert ic.t_throughput_cycles_per_iteration == 1.0


def test_fma_lowering_on_snb(snb):
    lowered = lower_kernel(builtin_kernel("triad"), snb)
    assert lowered.count("fma") == 0
    assert lowered.count("mul") == 1 and lowered.count("add") == 1
    assert lowered.flops_per_iteration == 8


def test_dot_critical_path_is_the_accumulator_chain(bdw, snb):
    dot = builtin_kernel("dot")
    assert incore_time(dot, bdw).t_critical_path_cycles_per_iteration == 5.0
    # on SNB the fma lowers to mul+add; the carried chain runs through the add
    assert incore_time(dot, snb).t_critical_path_cycles_per_iteration == 3.0


def test_critical_path_never_below_throughput(machines):
    for md in machines.values():
        for name in ("triad", "dot", "daxpy", "update", "copy", "load_only"):
            ic = incore_time(builtin_kernel(name), md)
            assert (ic.t_critical_path_cycles_per_iteration
                    >= ic.t_throughput_cycles_per_iteration)


def test_incore_unresolvable_instruction_propagates(snb):
    with pytest.raises(LookupError_):
        incore_time(builtin_kernel("gather_chain"), snb)  # no gather table


# -- AGU bound ----------------------------------------------------------------------

def test_agu_examples(machines):
    triad = builtin_kernel("triad")
    assert agu_bound(triad, machines["hsw"]) == 1.5
    assert agu_bound(triad, machines["snb"]) == 1.5
    assert agu_bound(builtin_kernel("load_only"), machines["bdw"]) == 1.0
    assert agu_bound(builtin_kernel("triad_lea"), machines["bdw"]) == 1.0
    # without a simple store AGU the LEA trick buys nothing
    assert agu_bound(builtin_kernel("triad_lea"), machines["snb"]) == 1.5


# -- oracle equivalence ----------------------------------------------------------------

@pytest.mark.parametrize("variant", ("triad", "triad_lea", "triad_noarith"))
def test_incore_matches_port_simulation(variant, machines):
    for md in machines.values():
        analytic = incore_time(builtin_kernel(variant), md)
        sim = PortSimulator(port_config_from_machine(md))
        simulated = sim.steady_state_cycles_per_iteration(triad_ops(md, variant))
        assert simulated == pytest.approx(
            analytic.t_throughput_cycles_per_iteration, rel=0.01), (md.name, variant)


@pytest.mark.parametrize(
    "name", ("dot", "load_only", "copy", "store_only", "update", "daxpy"))
def test_streaming_kernels_match_port_simulation(name, machines):
    from oracles import streaming_kernel_ops
    for md in machines.values():
        analytic = incore_time(builtin_kernel(name), md)
        sim = PortSimulator(port_config_from_machine(md))
        simulated = sim.steady_state_cycles_per_iteration(
            streaming_kernel_ops(md, name))
        assert simulated == pytest.approx(
            analytic.t_throughput_cycles_per_iteration, rel=0.01), (md.name, name)


# -- transfers -----------------------------------------------------------------------

def test_dot_l1l2_transfer_snb(snb):
    t = traffic_profile(builtin_kernel("dot"), 100 * KB, snb)
    # 64 B/iter over the derated 28 B/cy link
    times = transfer_times(t, snb)
    assert times.cycles["l1_l2"] == pytest.approx(64 / 28)
    assert times.cycles["l2_l3"] == 0.0
    assert times.cycles["l3_mem"] == 0.0


def test_dot_l1l2_transfer_snb_documented_link(snb):
    # with derates stripped the documented 32 B/cy link gives 2 cy/iter
    from ecmkit import load_machine, serialize_machine
    doc = serialize_machine(snb)
    for cache in doc["caches"]:
        cache.pop("derate", None)
    plain = load_machine(doc)
    t = traffic_profile(builtin_kernel("dot"), 100 * KB, plain)
    assert transfer_times(t, plain).cycles["l1_l2"] == pytest.approx(2.0)


def test_in_l1_everything_zero(bdw):
    t = traffic_profile(builtin_kernel("triad"), 8 * KB, bdw)
    times = transfer_times(t, bdw)
    assert all(cy == 0.0 for cy in times.cycles.values())


def test_l2_l3_theoretical_link(hsw):
    t = traffic_profile(builtin_kernel("triad"), 4 * 1024 * KB, hsw)
    times = transfer_times(t, hsw)
    assert t.residence_level == "L3"
    assert times.cycles["l2_l3"] == pytest.approx(128 / 32)  # 4 cy/iter


def test_memory_pattern_fallback_flag(bdw):
    from ecmkit import load_machine, serialize_machine
    t = traffic_profile(builtin_kernel("triad"), 1 << 30, bdw)
    object.__setattr__(t, "pattern", "exotic_pattern")
    # unknown pattern still matches the file's "default" sustained entry
    times = transfer_times(t, bdw)
    assert not times.used_theoretical_memory_bw
    assert times.memory_bandwidth_bytes_per_s == 62e9
    # with no sustained table at all, theoretical is used and flagged
    doc = serialize_machine(bdw)
    del doc["memory"]["sustained_bw_bytes_per_s"]
    bare = load_machine(doc)
    bare_times = transfer_times(t, bare)
    assert bare_times.used_theoretical_memory_bw
    assert bare_times.memory_bandwidth_bytes_per_s == 76.8e9


def test_doubling_bandwidth_never_increases_transfers(machines):
    from ecmkit import load_machine, serialize_machine
    for name, md in machines.items():
        doc = serialize_machine(md)
        for cache in doc["caches"]:
            if cache.get("inter_level_bytes_per_cycle"):
                cache["inter_level_bytes_per_cycle"] *= 2
        doubled = load_machine(doc)
        for kernel_name in ("triad", "dot", "copy"):
            kd = builtin_kernel(kernel_name)
            for ws in (100 * KB, 4096 * KB, 1 << 30):
                base = transfer_times(traffic_profile(kd, ws, md), md)
                fast = transfer_times(traffic_profile(kd, ws, doubled), doubled)
                for link, cy in fast.cycles.items():
                    assert cy <= base.cycles[link] + 1e-12


# -- composition ---------------------------------------------------------------------

def _incore(t_data, t_overlap=0.0):
    return InCoreTime(
        t_throughput_cycles_per_iteration=max(t_data, t_overlap),
        t_critical_path_cycles_per_iteration=max(t_data, t_overlap),
        per_port_cycles={}, t_agu_cycles=0.0, t_retire_cycles=t_overlap,
        t_data_path_cycles=t_data, t_overlap_cycles=t_overlap,
        body_chain_cycles=0.0)


def _transfers(**cycles):
    return TransferTimes(cycles=cycles, frequency_hz=2.3e9)


def test_compose_sum_rule():
    pred = compose(_incore(2.0), _transfers(l1_l2=2.0, l2_l3=4.0, l3_mem=8.0), "none")
    assert pred.composed_cycles_per_iteration == 16.0


def test_compose_max_rule():
    pred = compose(_incore(2.0), _transfers(l1_l2=2.0, l2_l3=4.0, l3_mem=8.0), "full")
    assert pred.composed_cycles_per_iteration == 8.0


def test_compose_in_l1_equals_incore(bdw):
    pred = predict(builtin_kernel("triad"), 8 * KB, bdw)
    assert pred.composed_cycles_per_iteration == \
        pred.in_core.t_throughput_cycles_per_iteration


def test_arithmetic_overlaps_in_both_policies():
    heavy = _incore(1.0, t_overlap=20.0)
    for policy in ("none", "full"):
        pred = compose(heavy, _transfers(l1_l2=2.0), policy)
        assert pred.composed_cycles_per_iteration == 20.0


def test_saturation_examples():
    pred = compose(_incore(2.0), _transfers(l1_l2=2.0, l2_l3=4.0, l3_mem=8.0), "none")
    # composed 16, memory term 8 -> two cores saturate
    assert pred.n_saturation == 2


@settings(max_examples=1000, deadline=None)
@given(
    t_data=st.floats(0.0, 50.0),
    t_overlap=st.floats(0.0, 50.0),
    l1_l2=st.floats(0.0, 50.0),
    l2_l3=st.floats(0.0, 50.0),
    l3_mem=st.floats(0.0, 50.0),
)
def test_compose_none_dominates_full(t_data, t_overlap, l1_l2, l2_l3, l3_mem):
    in_core = _incore(t_data, t_overlap)
    transfers = _transfers(l1_l2=l1_l2, l2_l3=l2_l3, l3_mem=l3_mem)
    added = compose(in_core, transfers, "none").composed_cycles_per_iteration
    overlapped = compose(in_core, transfers, "full").composed_cycles_per_iteration
    assert added >= overlapped - 1e-12


def test_in_l1_triad_bandwidth_across_generations(machines):
    expected = {"snb": 48.0, "ivb": 48.0, "hsw": 64.0, "bdw": 64.0}
    for name, value in expected.items():
        pred = predict(builtin_kernel("triad"), 8 * KB, machines[name])
        assert pred.predicted_bandwidth_bytes_per_cycle == pytest.approx(value)


def test_ecm_notation_format(bdw):
    pred = predict(builtin_kernel("triad"), 1 << 30, bdw)
    text = ecm_notation(pred)
    assert text.startswith("{") and "∥" in text and text.count("|") == 3


# -- scaling -------------------------------------------------------------------------

def test_scaling_caps_at_sustained(bdw):
    pred = predict(builtin_kernel("triad"), 1 << 30, bdw)
    scaling = scaling_prediction(pred, bdw)
    bandwidths = [bw for _, bw in scaling.points]
    assert all(b2 >= b1 - 1e-6 for b1, b2 in zip(bandwidths, bandwidths[1:]))
    # constant once saturated
    saturated = bandwidths[scaling.n_saturation - 1:]
    assert max(saturated) - min(saturated) < 1e-6
    assert bandwidths[-1] == pytest.approx(scaling.saturated_bandwidth_bytes_per_s)


def test_scaling_requires_memory_working_set(bdw):
    pred = predict(builtin_kernel("triad"), 8 * KB, bdw)
    with pytest.raises(InvariantError):
        scaling_prediction(pred, bdw)


def test_scaling_min_rule():
    # single-core 10 GB/s against a 62 GB/s cap: capped from core 7 onward
    points = [(n, min(n * 10e9, 62e9)) for n in range(1, 10)]
    assert points[6][1] == 62e9


# -- gather --------------------------------------------------------------------------

def test_gather_exact_cells(machines):
    assert predict_gather(machines["bdw"], "L1", 1) == 7.3
    assert predict_gather(machines["hsw"], "MEM", 8) == 89.3
    row = [predict_gather(machines["bdw"], "L2", s) for s in (1, 2, 4, 8)]
    assert row == [7.3, 7.6, 9.9, 18.1]
    assert row == sorted(row)


def test_gather_missing_table_errors(snb):
    with pytest.raises(LookupError_):
        predict_gather(snb, "L1", 1)


def test_gather_extrapolation_monotone(bdw):
    import dataclasses
    table = dataclasses.replace(bdw)
    # drop the 8-CL column and extrapolate it from the 4-CL cells
    cells = {level: {s: c for s, c in row.items() if s != 8}
             for level, row in bdw.gather_table.cycles.items()}
    gt = dataclasses.replace(bdw.gather_table, cycles=cells)
    md = dataclasses.replace(bdw, gather_table=gt)
    for level in ("L2", "L3"):
        assert predict_gather(md, level, 8) >= predict_gather(md, level, 4)
