from __future__ import annotations

import json
import time

import numpy as np
import pytest
from conftest import KINDS, mollifier, oracle_c0, oracle_eta

from colombeau.errors import SingularMomentMatrix
from colombeau.mollifier import (
    COSINE_POWER,
    STANDARD_BUMP,
    BumpProfile,
    Mollifier,
    build_mollifier,
    constants,
    eval_scaled,
    moment,
)
from colombeau.quadrature import quad


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("q", [0, 1, 2, 4, 6, 8])
@pytest.mark.parametrize("shift", [0.0, 0.3])
def test_moments_vanish(kind, q, shift):
    base = BumpProfile(kind, 1.0, shift)
    if kind == COSINE_POWER and shift and q == 8:
        # ill-conditioned: the guard must refuse rather than return garbage
        with pytest.raises(SingularMomentMatrix):
            build_mollifier(base, q)
        return
    m = build_mollifier(base, q)
    assert abs(moment(m, 0) - 1.0) < 1e-10
    for n in range(1, q + 1):
        assert abs(moment(m, n)) < 1e-8
    assert m.cdf(10.0) == pytest.approx(1.0, abs=1e-13)


def test_even_base_has_only_even_coefficients():
    m = mollifier(4)
    assert m.poly_coeffs[1] == 0.0 and m.poly_coeffs[3] == 0.0
    assert m.is_even


@pytest.mark.parametrize("q", [0, 2, 4])
def test_matches_independent_solve(q):
    m = mollifier(q)
    for z in (-0.7, 0.0, 0.35, 0.9):
        assert float(m(z)) == pytest.approx(oracle_eta(z, q), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("q", [0, 2])
def test_c0_matches_oracle(q):
    assert constants(mollifier(q)).c0 == pytest.approx(oracle_c0(q), rel=1e-10)


def test_c1_zero_for_even_and_nonzero_for_shifted():
    assert abs(constants(mollifier(2)).c1) < 1e-14
    k = constants(mollifier(0, STANDARD_BUMP, 0.3))
    # C1 = int x eta(-x)^2 dx = -int z eta(z)^2 dz; base centred at +0.3 gives C1 < 0
    assert k.c1 == pytest.approx(-0.2025350439, rel=1e-8)


def test_derivative_matches_finite_difference():
    m = mollifier(4)
    z = np.linspace(-0.95, 0.95, 13)
    h = 1e-5
    for order in range(3):
        fd = (m(z + h, order) - m(z - h, order)) / (2 * h)
        np.testing.assert_allclose(m(z, order + 1), fd, rtol=1e-5, atol=1e-5)


def test_cdf_is_running_integral():
    m = mollifier(2, STANDARD_BUMP, 0.3)
    for t in (-0.5, 0.1, 0.6, 1.2):
        ref = quad(lambda z: m(z), -0.7, t).value
        assert float(m.cdf(t)) == pytest.approx(ref, abs=1e-13)
    assert float(m.cdf(-3.0)) == 0.0


def test_eval_scaled_normalized_and_peak():
    m = mollifier(2)
    eps = 1e-3
    assert float(eval_scaled(m, eps, 0.0)) == pytest.approx(float(m(0.0)) / eps)
    total = quad(lambda x: eval_scaled(m, eps, x), -eps, eps, breakpoints=[0.0]).value
    assert total == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        eval_scaled(m, 1.5, 0.0)


def test_build_is_fast():
    t = time.perf_counter()
    build_mollifier(BumpProfile(), 6)
    assert time.perf_counter() - t < 1.0


def test_round_trip_dict():
    m = mollifier(4, COSINE_POWER, 0.2)
    again = Mollifier.from_dict(json.loads(json.dumps(m.to_dict())))
    assert again == m
    rebuilt = Mollifier.from_dict({"kind": STANDARD_BUMP, "q": 2})
    assert rebuilt == mollifier(2)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        build_mollifier(BumpProfile(), -1)
    with pytest.raises(ValueError):
        build_mollifier(BumpProfile(), 12)
    with pytest.raises(ValueError):
        BumpProfile("triangle")
    with pytest.raises(ValueError):
        BumpProfile(COSINE_POWER, power=4)
    with pytest.raises(SingularMomentMatrix):
        build_mollifier(BumpProfile(), 4, condition_threshold=1.0)


def test_high_precision_coefficients_agree():
    m = mollifier(4)
    mp = [float(c) for c in m.coeffs_mp(30)]
    np.testing.assert_allclose(mp, m.poly_coeffs, rtol=1e-10, atol=1e-12)
