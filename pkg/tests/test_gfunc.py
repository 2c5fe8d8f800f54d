from __future__ import annotations

import math

import numpy as np
import pytest
import sympy
from conftest import mollifier
from hypothesis import given, settings
from hypothesis import strategies as st

from colombeau import gfunc as G
from colombeau.errors import DerivativeOrderExhausted, InadmissibleEpsilon, MixedMollifier, UnsupportedNode
from colombeau.gfunc import (
    X,
    ConvEmbed,
    DeltaEmb,
    HeavisideEmb,
    PowerCutoff,
    Smooth,
    Ups,
    UpsPrime,
    equivalent,
    evaluate,
    expand,
    from_expansion,
    multiply,
    shadow_simplify,
)

EPS = 1e-2
GRID = np.linspace(-0.02, 0.02, 41)


def test_delta_peak(m2):
    assert evaluate(DeltaEmb(m2), EPS, 0.0) == pytest.approx(float(m2(0.0)) / EPS, rel=1e-15)


def test_heaviside_limits(m2):
    H = HeavisideEmb(m2)
    assert evaluate(H, EPS, -0.5) == 0.0
    assert evaluate(H, EPS, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(H, EPS, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_eps_must_be_in_unit_interval(m2):
    with pytest.raises(ValueError):
        evaluate(DeltaEmb(m2), 0.0, 0.0)
    with pytest.raises(ValueError):
        evaluate(DeltaEmb(m2), 1.0, 0.0)


def test_derivative_of_heaviside_is_delta(m2):
    H = HeavisideEmb(m2, shift=0.2)
    assert H.derivative() == DeltaEmb(m2, shift=0.2)
    h = 1e-7
    fd = (evaluate(H, EPS, GRID + h) - evaluate(H, EPS, GRID - h)) / (2 * h)
    np.testing.assert_allclose(evaluate(H.derivative(), EPS, GRID), fd, rtol=1e-5, atol=1e-4)


def test_derivative_of_constant_is_zero():
    d = Smooth.constant(1.0).derivative()
    assert np.all(evaluate(d, EPS, GRID) == 0.0)


def test_product_rule_tree_and_finite_difference(m2):
    H, d = HeavisideEmb(m2), DeltaEmb(m2)
    dHH = multiply(H, H).derivative()
    assert equivalent(dHH, 2 * H * d)
    h = 1e-6
    x = np.linspace(-0.009, 0.009, 19)
    fd = (evaluate(H * H, EPS, x + h) - evaluate(H * H, EPS, x - h)) / (2 * h)
    ex = evaluate(dHH, EPS, x)
    big = np.abs(ex) > 1e-3 * np.abs(ex).max()
    np.testing.assert_allclose(ex[big], fd[big], rtol=1e-4)


def test_h_squared_is_not_h_as_tree(m2):
    H = HeavisideEmb(m2)
    assert not equivalent(H * H, H)
    assert np.max(np.abs(evaluate(H * H, EPS, GRID) - evaluate(H, EPS, GRID))) > 0.1


def test_multiply_by_one_is_identity(m2):
    d = DeltaEmb(m2)
    assert multiply(d, 1) is d
    np.testing.assert_array_equal(evaluate(d * Smooth.constant(1), EPS, GRID), evaluate(d, EPS, GRID))


def test_delta_squared_at_origin(m2):
    d = DeltaEmb(m2)
    assert evaluate(d * d, EPS, 0.0) == pytest.approx(float(m2(0.0)) ** 2 / EPS**2, rel=1e-14)


def test_mixed_mollifiers_rejected(m0, m2):
    with pytest.raises(MixedMollifier):
        multiply(DeltaEmb(m0), DeltaEmb(m2))
    with pytest.raises(MixedMollifier):
        HeavisideEmb(m0) + HeavisideEmb(m2)


def test_callable_smooth_exhausts_derivatives():
    f = Smooth.from_callables(np.sin, np.cos, name="sin")
    assert evaluate(f.derivative(), 0.1, 0.3) == pytest.approx(math.cos(0.3))
    with pytest.raises(DerivativeOrderExhausted):
        f.derivative().derivative()


def test_symbolic_smooth_derivatives():
    f = Smooth.of("sin(x)*x")
    assert evaluate(f.derivative().derivative(), 0.1, 0.4) == pytest.approx(2 * math.cos(0.4) - 0.4 * math.sin(0.4))


def test_ups_guard_and_support(m2):
    U = Ups(m2, 0.1)
    assert U.eps_cap == pytest.approx(0.025)
    with pytest.raises(InadmissibleEpsilon):
        evaluate(U, 0.03, 0.1)
    r = np.linspace(0.0, 0.1 - 0.025, 50)
    assert np.all(evaluate(U, 0.025, r) == 0.0)
    assert evaluate(U, 1e-3, 0.2) == pytest.approx(1.0, abs=1e-15)


def test_ups_derivatives_follow_kernel_formula(m2):
    a, eps = 0.1, 1e-3
    r = a + eps * np.linspace(-0.9, 0.9, 7)
    t = (a - r) / eps
    for k in (1, 2, 3):
        ref = (-1) ** (k - 1) * eps ** (-k) * m2(t, k - 1)
        np.testing.assert_allclose(evaluate(Ups(m2, a, k), eps, r), ref, rtol=1e-14)
    assert UpsPrime(m2, a) == Ups(m2, a).derivative()


def test_power_cutoff_zero_at_origin(m2):
    phi = PowerCutoff(m2, 1, 0.1)
    assert evaluate(phi, 1e-3, 0.0) == 0.0
    assert evaluate(phi, 1e-3, 2.0) == pytest.approx(0.5, rel=1e-14)


def test_radial_power_derivative(m2):
    phi = PowerCutoff(m2, 1, 0.1)
    U = Ups(m2, 0.1)
    expected = G.add(G.scale(-1.0, G.radial_power(-2, U)), G.radial_power(-1, U.derivative()))
    assert equivalent(phi.derivative(), expected)


def test_conv_embed_of_heaviside_equals_heaviside_embedding(m2):
    c = ConvEmbed.of(m2, sympy.Heaviside(X))
    assert c.breakpoints == (0.0,)
    np.testing.assert_allclose(evaluate(c, EPS, GRID), evaluate(HeavisideEmb(m2), EPS, GRID), atol=1e-14)
    np.testing.assert_allclose(evaluate(c.derivative(), EPS, GRID), evaluate(DeltaEmb(m2), EPS, GRID),
                               rtol=1e-9, atol=1e-8)


def test_conv_embed_smooth_is_close_to_f(m2):
    f = sympy.sin(X) + X**3
    c = ConvEmbed.of(m2, f)
    x = np.linspace(-1, 1, 9)
    exact = np.sin(x) + x**3
    e1 = np.max(np.abs(evaluate(c, 1e-2, x) - exact))
    e2 = np.max(np.abs(evaluate(c, 5e-3, x) - exact))
    assert e1 < 1e-6
    # even q = 2 kernel: remainder ~ eps^4, at least the eps^3 guaranteed by q + 1
    assert e1 / e2 > 2**3


def test_conv_embed_callable_needs_breakpoints(m2):
    c = ConvEmbed.of(m2, lambda y: np.abs(y), breakpoints=[0.0])
    assert c.expr is None
    assert evaluate(c, EPS, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_compose_chain_rule(m2):
    H = HeavisideEmb(m2)
    g = G.compose(Smooth.of("exp(x)"), H)
    x = np.linspace(-0.01, 0.01, 11)
    np.testing.assert_allclose(evaluate(g.derivative(), EPS, x),
                               np.exp(evaluate(H, EPS, x)) * evaluate(DeltaEmb(m2), EPS, x), rtol=1e-14)


def test_power_node(m2):
    H = HeavisideEmb(m2)
    assert equivalent((H**3).derivative(), 3 * H * H * DeltaEmb(m2))
    assert G.power(H, 0) == G.ONE and G.power(H, 1) is H
    with pytest.raises(ValueError):
        G.power(H, -1)


def test_features_collect_breakpoints(m2):
    g = HeavisideEmb(m2, 1.0) * Ups(m2, 0.5)
    assert sorted(g.features(1e-3)) == [(1e-3, 1e-3), (0.5, 1e-3)]
    assert g.max_admissible_eps() == pytest.approx(0.125)


# --- shadows -------------------------------------------------------------


def test_shadow_rules(m2):
    U = Ups(m2, 0.1)
    d = sympy.DiracDelta(X)
    assert shadow_simplify(U) == sympy.Heaviside(X)
    assert shadow_simplify(U.derivative(), "line") == d
    assert sympy.simplify(shadow_simplify(U.derivative().derivative().derivative()) - 2 * d / X**2) == 0
    assert sympy.simplify(shadow_simplify(U.derivative().derivative(), "line") + d / X) == 0
    assert shadow_simplify(DeltaEmb(m2), "line") == d
    assert shadow_simplify(DeltaEmb(m2).derivative(), "line") == sympy.DiracDelta(X, 1)


def test_shadow_drops_radially_null_delta(m2):
    # delta(r) r^p with p > -2 pairs to zero against r^2 dr
    U = Ups(m2, 0.1)
    assert shadow_simplify(G.radial_power(-1, U.derivative())) == 0
    assert shadow_simplify(G.radial_power(-1, U.derivative()), "line") != 0


def test_shadow_rejects_singular_products(m2):
    with pytest.raises(UnsupportedNode):
        shadow_simplify(HeavisideEmb(m2) * DeltaEmb(m2))
    with pytest.raises(UnsupportedNode):
        shadow_simplify(Smooth.from_callables(np.sin))


# --- inconsistency chain does not reproduce --------------------------------


def test_two_h_delta_is_not_h_delta(m2):
    from colombeau.asymptotics import pairing_sweep

    T = G.TestFunction.bump(0.3, 0.8)
    H, d = HeavisideEmb(m2), DeltaEmb(m2)
    t0 = T.value_at(0.0)
    assert pairing_sweep(2 * H * d, T).limit == pytest.approx(t0, rel=1e-8)
    assert pairing_sweep(H * d, T).limit == pytest.approx(t0 / 2, rel=1e-8)


# --- representative smoothness + algebra laws (property-based) -------------


def _leaves():
    m = mollifier(2)
    return [HeavisideEmb(m), DeltaEmb(m), HeavisideEmb(m, 0.4), Smooth.of("x**2 + 1"), Smooth.of("cos(x)"),
            ConvEmbed.of(m, sympy.Abs(X), [0.0])]


def trees(depth: int = 3):
    leaf = st.sampled_from(_leaves())
    return st.recursive(
        leaf,
        lambda kids: st.one_of(
            st.tuples(kids, kids).map(lambda p: p[0] + p[1]),
            st.tuples(kids, kids).map(lambda p: p[0] * p[1]),
            st.tuples(st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3), kids)
            .map(lambda p: p[0] * p[1]),
            kids.map(lambda k: k**2),
        ),
        max_leaves=5,
    )


@settings(max_examples=40, deadline=None)
@given(trees(), trees(), st.floats(-2, 2), st.floats(-2, 2))
def test_eval_is_linear(g, h, a, b):
    x = np.linspace(-0.03, 0.03, 13)
    lhs = evaluate(a * g + b * h, EPS, x) if a and b else None
    if lhs is None:
        return
    rhs = a * evaluate(g, EPS, x) + b * evaluate(h, EPS, x)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9 * (1 + np.abs(rhs).max()))


@settings(max_examples=40, deadline=None)
@given(trees())
def test_expansion_preserves_values(g):
    x = np.linspace(-0.03, 0.03, 13)
    v = evaluate(g, EPS, x)
    w = evaluate(from_expansion(expand(g)), EPS, x)
    np.testing.assert_allclose(w, v, rtol=1e-10, atol=1e-10 * (1 + np.abs(v).max()))


@settings(max_examples=30, deadline=None)
@given(trees())
def test_derivative_matches_finite_difference(g):
    x = np.linspace(-0.015, 0.015, 7) + 1e-4
    h = 1e-7
    fd = (evaluate(g, EPS, x + h) - evaluate(g, EPS, x - h)) / (2 * h)
    d = evaluate(g.derivative(), EPS, x)
    scale = 1 + np.abs(d).max()
    np.testing.assert_allclose(d, fd, rtol=1e-4, atol=1e-4 * scale)


def test_trees_are_hashable_and_comparable(m2):
    a = HeavisideEmb(m2) * DeltaEmb(m2)
    b = HeavisideEmb(m2) * DeltaEmb(m2)
    assert a == b and hash(a) == hash(b)


def test_high_precision_evaluation(m2):
    c = ConvEmbed.of(m2, sympy.exp(X))
    lo = evaluate(c, 1e-2, 0.3)
    hi = G.evaluate_mp(c, 1e-2, 0.3, 40)
    assert float(hi) == pytest.approx(lo, rel=1e-13)
    H = HeavisideEmb(m2)
    assert float(G.evaluate_mp(H * DeltaEmb(m2), 1e-2, 0.003)) == pytest.approx(
        evaluate(H * DeltaEmb(m2), 1e-2, 0.003), rel=1e-12)
