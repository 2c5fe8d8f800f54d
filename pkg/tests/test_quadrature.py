from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colombeau.errors import MaxSubdivisions
from colombeau.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, QuadSpec, initial_partition, quad


def test_rule_weights_sum_to_interval_length():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(NODES) > 0)


def test_kronrod_exact_for_degree_22_polynomial():
    r = quad(lambda x: x**22, -1, 1)
    assert r.value == pytest.approx(2.0 / 23.0, rel=1e-14)


def test_polynomial():
    assert quad(lambda x: 3 * x**2, 0, 1).value == pytest.approx(1.0, abs=1e-14)


def test_narrow_spike_found_via_breakpoint_and_scale():
    eps = 1e-6
    f = lambda x: np.where(np.abs(x) < eps, (1 - np.abs(x) / eps) / eps, 0.0)  # noqa: E731
    r = quad(f, -1, 1, breakpoints=[0.0], scale_hint=eps)
    assert r.value == pytest.approx(1.0, abs=1e-12)


def test_step_with_breakpoint_is_exact():
    r = quad(lambda x: np.where(x < 0.3, 1.0, 0.0), -0.4, 1.0, breakpoints=[0.3])
    assert r.value == pytest.approx(0.7, abs=1e-15)


def test_initial_partition_grades_geometrically():
    edges = initial_partition(QuadSpec((-1.0, 1.0), (0.0,), 1e-3))
    widths = np.diff(edges)
    assert widths.min() == pytest.approx(1e-3)
    assert 0.0 in edges


def test_scalar_only_integrand_is_vectorized():
    r = quad(lambda x: math.sin(x), 0.0, math.pi)
    assert r.value == pytest.approx(2.0, rel=1e-12)


def test_max_subdivisions_raised():
    with pytest.raises(MaxSubdivisions) as exc:
        quad(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, max_cells=50, rel_tol=1e-14)
    assert exc.value.cells > 50


@pytest.mark.parametrize("bad", [dict(interval=(1.0, 0.0)), dict(interval=(0.0, 1.0), rel_tol=0.0),
                                 dict(interval=(0.0, 1.0), scale_hint=-1.0)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        QuadSpec(**bad)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 4), st.floats(-5, 5))
def test_gaussian_integral(mu, width, shift):
    lo, hi = mu - 10 * width, mu + 10 * width
    r = quad(lambda x: np.exp(-((x - mu) / width) ** 2), lo, hi, breakpoints=[mu + shift])
    assert r.value == pytest.approx(width * math.sqrt(math.pi), rel=1e-10)
