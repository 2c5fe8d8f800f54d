from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad as squad

from colombeau.mollifier import COSINE_POWER, STANDARD_BUMP, BumpProfile, build_mollifier


@lru_cache(maxsize=None)
def mollifier(q: int = 2, kind: str = STANDARD_BUMP, shift: float = 0.0, half_width: float = 1.0):
    return build_mollifier(BumpProfile(kind, half_width, shift), q)


@pytest.fixture
def m0():
    return mollifier(0)


@pytest.fixture
def m2():
    return mollifier(2)


@pytest.fixture
def m4():
    return mollifier(4)


@pytest.fixture
def m_shifted():
    """Uneven mollifier (base centred at 0.3) with nonzero C1."""
    return mollifier(0, STANDARD_BUMP, 0.3)


# --- independent oracles (scipy + hand-written bump, no engine code) --------


def raw_bump(z: float, shift: float = 0.0, hw: float = 1.0) -> float:
    u = (z - shift) / hw
    return math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1 else 0.0


def oracle_even_coeffs(q: int) -> np.ndarray:
    """Polynomial coefficients (in z^0, z^2, ...) of the even standard-bump mollifier."""
    k = q // 2 + 1
    mom = [squad(lambda z, n=n: z**n * raw_bump(z), -1, 1, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
           for n in range(0, 4 * k, 2)]
    M = np.array([[mom[i + j] for j in range(k)] for i in range(k)])
    rhs = np.zeros(k)
    rhs[0] = 1.0
    return np.linalg.solve(M, rhs)


def oracle_eta(z: float, q: int) -> float:
    c = oracle_even_coeffs(q)
    return sum(ci * z ** (2 * i) for i, ci in enumerate(c)) * raw_bump(z)


def oracle_c0(q: int) -> float:
    c = oracle_even_coeffs(q)
    f = lambda z: (sum(ci * z ** (2 * i) for i, ci in enumerate(c)) * raw_bump(z)) ** 2  # noqa: E731
    return squad(f, -1, 1, epsabs=1e-15, epsrel=1e-12, limit=200)[0]


KINDS = (STANDARD_BUMP, COSINE_POWER)


# --- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
