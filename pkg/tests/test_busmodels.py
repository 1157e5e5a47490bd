import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gffs.busmodels import (
    FirstOrderG,
    GeneratorParams,
    GffsParams,
    GfviParams,
    LoadParams,
    generator_tf,
    gffs_tf,
    gfvi_tf,
    load_tf,
    static_gain_inverse,
)
from gffs.ratfun import RatFun, rf_approx_equal, rf_eval, rf_is_stable, simplify

s = sp.symbols("s")


def expanded(expr):
    """Monic ascending coefficients of ``expr`` via symbolic expansion."""
    num, den = sp.fraction(sp.cancel(sp.together(expr)))
    pn, pd = sp.Poly(num, s), sp.Poly(den, s)
    lead = float(pd.LC())
    return [float(c) / lead for c in reversed(pn.all_coeffs())], [float(c) / lead for c in reversed(pd.all_coeffs())]


def assert_coeffs(f: RatFun, num, den):
    np.testing.assert_allclose(f.num.coeffs, num, rtol=1e-13)
    np.testing.assert_allclose(f.den.coeffs, den, rtol=1e-13)


def generator_symbolic(m, d, tau, rt):
    m, d, tau, rt = map(sp.nsimplify, (m, d, tau, rt))
    return 1 / (m * s + d + (1 / rt) / (tau * s + 1))


@pytest.mark.parametrize("params", [(1, 1, 1, 1), (2, 0.5, 4, 0.05)])
def test_generator_against_symbolic_expansion(params):
    f = generator_tf(GeneratorParams(*params))
    assert_coeffs(f, *expanded(generator_symbolic(*params)))


def test_generator_examples_literal():
    # (s+1)/(s^2+2s+2) and (4s+1)/(8s^2+4s+20.5), denominators made monic
    assert rf_approx_equal(generator_tf(GeneratorParams(1, 1, 1, 1)), RatFun.from_coeffs([1, 1], [2, 2, 1]))
    assert rf_approx_equal(
        generator_tf(GeneratorParams(2, 0.5, 4, 0.05)), RatFun.from_coeffs([1, 4], [20.5, 4, 8]), tol=1e-14
    )


def test_generator_without_droop_reduces_to_swing():
    f = simplify(generator_tf(GeneratorParams(2.0, 0.5, 4.0, math.inf)))
    assert f.den.degree == 1
    assert rf_approx_equal(f, RatFun.from_coeffs([1.0], [0.5, 2.0]))


def test_gffs_examples():
    assert rf_approx_equal(gffs_tf(GffsParams(1, 1)), RatFun.from_coeffs([1], [1, 1]))
    f = gffs_tf(GffsParams(1, 2, FirstOrderG(1, 1)))
    expr = 1 / (s + 2 - 1 / (s + 1))
    assert_coeffs(f, *expanded(expr))
    assert_coeffs(f, [1, 1], [1, 3, 1])


def test_gffs_vanishing_filter_matches_zero_variant():
    zero = gffs_tf(GffsParams(1.5, 2.0))
    tiny = gffs_tf(GffsParams(1.5, 2.0, FirstOrderG(1e-13, 3.0)))
    assert rf_approx_equal(tiny, zero, tol=1e-12)
    assert simplify(tiny).den.degree == 1


def test_gfvi_examples():
    assert rf_approx_equal(gfvi_tf(GfviParams(1, 1)), RatFun.from_coeffs([1], [1, 1]))
    assert rf_approx_equal(gfvi_tf(GfviParams(2, 0.5)), RatFun.from_coeffs([1], [0.5, 2]))
    with pytest.raises(ValueError):
        GfviParams(3, 0)


def test_load_examples():
    assert load_tf(LoadParams(0.05))(0.0) == pytest.approx(20.0)
    assert load_tf(LoadParams(1.0))(3.0 + 1j) == 1.0
    with pytest.raises(ValueError):
        LoadParams(0.0)


@pytest.mark.parametrize(
    "ctor, args",
    [
        (GeneratorParams, (0, 1, 1, 1)),
        (GeneratorParams, (1, -1, 1, 1)),
        (GeneratorParams, (1, 1, 0, 1)),
        (FirstOrderG, (0, 1)),
        (FirstOrderG, (1, -2)),
        (GffsParams, (0, 1)),
    ],
)
def test_nonpositive_parameters_rejected(ctor, args):
    with pytest.raises(ValueError):
        ctor(*args)


def test_relative_degrees():
    assert generator_tf(GeneratorParams(1, 1, 1, 1)).relative_degree == 1
    assert gffs_tf(GffsParams(1, 2, FirstOrderG(1, 1))).relative_degree == 1
    assert gfvi_tf(GfviParams(1, 1)).relative_degree == 1
    assert load_tf(LoadParams(1)).relative_degree == 0


pos = st.floats(0.01, 100, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos)
def test_generator_always_stable_with_matching_dc_gain(m, d, tau, rt):
    p = GeneratorParams(m, d, tau, rt)
    f = generator_tf(p)
    assert rf_is_stable(f)
    assert rf_eval(f, 0.0) == pytest.approx(1 / (d + 1 / rt), rel=1e-12)
    assert static_gain_inverse(p) == pytest.approx(1 / rf_eval(f, 0.0), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(pos, pos, pos, st.floats(0.01, 3.0))
def test_gffs_stable_iff_damping_exceeds_rho(m, d, sigma, ratio):
    assume(abs(ratio - 1.0) > 1e-6)
    p = GffsParams(m, d, FirstOrderG(ratio * d, sigma))
    f = gffs_tf(p)
    assert rf_is_stable(f) == (d > p.rho)
    if ratio < 1:
        assert rf_eval(f, 0.0) == pytest.approx(1 / (d - p.rho), rel=1e-9)
