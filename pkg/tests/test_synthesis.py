import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gffs.busmodels import FirstOrderG, GeneratorParams, GfviParams, LoadParams, generator_tf
from gffs.errors import CardinalityViolation, InfeasibleTarget, NoInverters, WeightError
from gffs.netmodel import Bus, BusKind, Case, Line
from gffs.ratfun import RatFun, relative_coefficient_error, rf_add, rf_approx_equal
from gffs.synthesis import (
    FrequencySpec,
    SynthesisTarget,
    allocate_equal,
    benchmark_controllers,
    coherent_gains,
    coherent_tf,
    g_distribute_reduced,
    g_match_individual,
    predict_response,
    synthesize,
    target_gains,
    turbine_mismatch_norm,
)

from conftest import random_case


def star_case(gens, n_inv, loads=()):
    """Generators, inverters and loads all tied to bus 0 with strong lines."""
    buses = [Bus(k, BusKind.GENERATOR, 1.0, 0.0, GeneratorParams(*g)) for k, g in enumerate(gens)]
    buses += [Bus(len(buses) + k, BusKind.INVERTER, 1.0, 0.0, None) for k in range(n_inv)]
    buses += [Bus(len(buses) + k, BusKind.LOAD, 1.0, 0.0, LoadParams(d)) for k, d in enumerate(loads)]
    lines = [Line(0, k, 50.0) for k in range(1, len(buses))]
    return Case(tuple(buses), tuple(lines))


def test_target_gain_examples():
    t = target_gains(FrequencySpec(-0.3, 0.0375, 0.03))
    assert (t.a, t.b) == pytest.approx((10.0, 8.0), rel=1e-14)
    t = target_gains(FrequencySpec(-1, 1, 1))
    assert (t.a, t.b) == (1.0, 1.0)


def test_predict_response_examples():
    assert predict_response(SynthesisTarget(10, 8), -0.3) == pytest.approx((-0.0375, -0.03))
    assert predict_response(SynthesisTarget(10, 8), 0.0) == (0.0, 0.0)
    ss1, r1 = predict_response(SynthesisTarget(10, 8), -0.3)
    ss2, r2 = predict_response(SynthesisTarget(10, 16), -0.3)
    assert ss2 == pytest.approx(ss1 / 2) and r2 == r1


def test_allocation_examples():
    case = star_case([(1.5, 0.5, 1, 0.1), (2.5, 1.5, 1, 0.1)], 3)
    alloc = allocate_equal(SynthesisTarget(10, 8), case)
    assert list(alloc.values()) == [pytest.approx((2.0, 2.0))] * 3
    with pytest.raises(InfeasibleTarget):
        allocate_equal(SynthesisTarget(3, 8), case)
    single = star_case([(4, 2, 1, 0.1)], 1)
    assert allocate_equal(SynthesisTarget(10, 8), single) == {1: pytest.approx((6.0, 6.0))}


def test_allocation_without_inverters():
    with pytest.raises(NoInverters):
        allocate_equal(SynthesisTarget(10, 8), star_case([(1, 1, 1, 0.1)], 0, loads=(1.0,)))


def test_g_match_examples():
    case = star_case([(1, 1, 1, 0.1), (1, 1, 5, 1 / 30)], 3)
    g = g_match_individual(case)
    assert g[2] == FirstOrderG(10.0, 1.0)
    assert g[3].rho == pytest.approx(30.0) and g[3].sigma == 5.0
    assert g[4] is None
    with pytest.raises(CardinalityViolation):
        g_match_individual(star_case([(1, 1, 1, 0.1)] * 3, 2))
    no_gen = Case((Bus(0, BusKind.INVERTER, 1.0, 0.0), Bus(1, BusKind.INVERTER, 1.0, 0.0)), (Line(0, 1, 1.0),))
    assert g_match_individual(no_gen) == {0: None, 1: None}


def test_g_distribute_examples():
    # reduced turbine (40, 4): (10, 1) and (30, 5)
    gens = [(1, 1, 1, 0.1), (1, 1, 5, 1 / 30)]
    case = star_case(gens, 6)
    g = g_distribute_reduced(case)
    for gi in g.values():
        assert gi.rho == pytest.approx(40 / 6) and gi.sigma == pytest.approx(4.0)
    z = np.zeros(6)
    z[0] = 1
    g = g_distribute_reduced(case, z)
    assert g[2].rho == pytest.approx(40.0)
    assert all(g[k] is None for k in range(3, 8))
    with pytest.raises(WeightError):
        g_distribute_reduced(case, np.full(6, 0.15))


def test_g_match_is_exact_identity(desk_case):
    g = g_match_individual(desk_case)
    lhs = RatFun.constant(0.0)
    for gi in g.values():
        if gi is not None:
            lhs = rf_add(lhs, gi.tf())
    rhs = RatFun.constant(0.0)
    for b in desk_case.generators:
        rhs = rf_add(rhs, RatFun.from_coeffs([b.params.rt_inv], [1.0, b.params.tau]))
    assert relative_coefficient_error(lhs, rhs) < 1e-14
    assert turbine_mismatch_norm(desk_case, g) < 1e-12


def test_distribute_mismatch_reported_for_unequal_taus(desk_case):
    g = g_distribute_reduced(desk_case)
    assert turbine_mismatch_norm(desk_case, g) > 1e-3


def test_coherent_examples():
    gen = GeneratorParams(2, 0.5, 4, 0.05)
    one = Case((Bus(0, BusKind.GENERATOR, 1.0, 0.0, gen),), ())
    assert rf_approx_equal(coherent_tf(one), generator_tf(gen))
    two = Case(
        (
            Bus(0, BusKind.INVERTER, 1.0, 0.0, GfviParams(1, 1)),
            Bus(1, BusKind.INVERTER, 1.0, 0.0, GfviParams(2, 3)),
        ),
        (Line(0, 1, 5.0),),
    )
    assert rf_approx_equal(coherent_tf(two), RatFun.from_coeffs([1.0], [4.0, 3.0]))


def test_theorem_one_identity_on_desk_case(matched_case):
    case, report = matched_case
    hc = coherent_tf(case)
    want = RatFun.from_coeffs([1.0], [report.b + report.load_damping, report.a])
    assert relative_coefficient_error(hc, want) < 1e-8
    assert coherent_gains(case) == pytest.approx((report.a, report.b_effective), rel=1e-9)


def test_allocation_conservation(desk_case):
    target = SynthesisTarget(60.0, 80.0)
    alloc = allocate_equal(target, desk_case)
    gens = [b.params for b in desk_case.generators]
    assert sum(m for m, _ in alloc.values()) + sum(p.m for p in gens) == pytest.approx(60.0, abs=1e-12)
    assert sum(d for _, d in alloc.values()) + sum(p.d for p in gens) == pytest.approx(80.0, abs=1e-12)
    _, report = synthesize(desk_case, target, "distribute")
    total_rinv = sum(p.rt_inv for p in gens)
    assert report.turbine_raise == pytest.approx(total_rinv, rel=1e-12)
    assert report.b_effective == pytest.approx(80.0 + total_rinv + report.load_damping, rel=1e-12)


def test_inverters_supply_steady_state_power(matched_case, desk_case):
    case, report = matched_case
    gens = [b.params for b in desk_case.generators]
    assert sum(r["d_inv"] for r in report.inverters) > sum(p.rt_inv for p in gens)
    load_d = report.load_damping
    no_inverter_gain = 1.0 / (sum(p.d + p.rt_inv for p in gens) + load_d)
    assert coherent_tf(case)(0.0) < no_inverter_gain


def test_benchmark_legs_have_matched_predictions(benchmark_pair):
    gfvi, gffs, report = benchmark_pair
    assert coherent_gains(gfvi)[1] == pytest.approx(coherent_gains(gffs)[1], rel=1e-12)
    assert coherent_gains(gfvi)[0] == pytest.approx(coherent_gains(gffs)[0], rel=1e-12)
    assert coherent_gains(gffs) == pytest.approx((report.a, report.b_effective), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["match", "distribute"]))
def test_theorem_one_round_trip(seed, strategy):
    rng = np.random.default_rng(seed)
    n_gen = int(rng.integers(1, 5))
    n_inv = int(rng.integers(n_gen, 7))
    case = random_case(rng, n_gen, n_inv, int(rng.integers(0, 3)), equal_tau=strategy == "distribute")
    gens = [b.params for b in case.generators]
    target = SynthesisTarget(
        sum(p.m for p in gens) + rng.uniform(1, 20),
        sum(p.d for p in gens) + rng.uniform(1, 20),
    )
    synth, report = synthesize(case, target, strategy)
    want = RatFun.from_coeffs([1.0], [report.b_effective, report.a])
    assert relative_coefficient_error(coherent_tf(synth), want) < 1e-8
