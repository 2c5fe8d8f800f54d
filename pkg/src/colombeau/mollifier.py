"""Vanishing-moment mollifiers.

A mollifier here is ``eta(z) = p(z) * beta(z)`` where ``beta`` is a compactly
supported smooth bump and ``p`` a polynomial chosen so that

    int eta = 1,    int z**n eta = 0  for n = 1..q.

The coefficients of ``p`` solve the Hankel system ``M c = e_1`` with
``M[n, k] = int z**(n+k) beta``.  For an even, unshifted bump only even powers
are kept, because the odd conditions hold by symmetry.  For ``q >= 1`` the
result necessarily changes sign on its support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import SingularMomentMatrix

STANDARD_BUMP = "standard-bump"
COSINE_POWER = "cosine-power"
KINDS = (STANDARD_BUMP, COSINE_POWER)

MOMENT_TOL = 1e-12
CONDITION_THRESHOLD = 1e10
DEFAULT_Q_MAX = 8

# composite Gauss-Legendre rule used for construction and the cumulative integral
_PANELS = 64
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@lru_cache(maxsize=None)
def _std_bump_numerators(order: int) -> tuple:
    """Polynomials P_k with d^k/du^k exp(-1/(1-u^2)) = P_k(u) / (1-u^2)^(2k) * exp(...)."""
    polys = [np.array([1.0])]
    one_minus_u2 = np.array([1.0, 0.0, -1.0])
    u = np.array([0.0, 1.0])
    for k in range(order):
        pk = polys[-1]
        nxt = P.polyadd(
            P.polymul(P.polyder(pk), P.polymul(one_minus_u2, one_minus_u2)),
            P.polymul(P.polymul(4.0 * k * u, pk), one_minus_u2),
        )
        nxt = P.polysub(nxt, P.polymul(2.0 * u, pk))
        polys.append(nxt)
    return tuple(polys)


def _std_bump(u: np.ndarray, order: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    w = 1.0 - ui * ui
    base = np.exp(-1.0 / w)
    if order == 0:
        out[inside] = base
        return out
    num = P.polyval(ui, _std_bump_numerators(order)[order])
    with np.errstate(over="ignore", invalid="ignore"):
        val = np.where(base > 0.0, num / w ** (2 * order) * base, 0.0)
    out[inside] = val
    return out


def _cos_bump(u: np.ndarray, order: int, power: int) -> np.ndarray:
    # cos^m(t) = 2^-m sum_j C(m, j) cos((m - 2j) t), t = pi u / 2
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    t = 0.5 * np.pi * u[inside]
    acc = np.zeros_like(t)
    for j in range(power + 1):
        n = power - 2 * j
        acc += math.comb(power, j) * (0.5 * np.pi * n) ** order * np.cos(n * t + 0.5 * np.pi * order)
    out[inside] = acc / 2.0**power
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Compactly supported smooth bump on ``[shift - half_width, shift + half_width]``.

    ``standard-bump`` is ``exp(-1/(1-u^2))``; ``cosine-power`` is ``cos(pi u/2)**power``
    (``power >= 8``), with ``u = (z - shift) / half_width``.
    """

    kind: str = STANDARD_BUMP
    half_width: float = 1.0
    shift: float = 0.0
    power: int = 8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bump kind {self.kind!r}; expected one of {KINDS}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.kind == COSINE_POWER and self.power < 8:
            raise ValueError("cosine-power profiles need power >= 8")

    @property
    def support(self) -> tuple[float, float]:
        return (self.shift - self.half_width, self.shift + self.half_width)

    @property
    def is_even(self) -> bool:
        return self.shift == 0.0

    def __call__(self, z, order: int = 0) -> np.ndarray:
        """Value (or ``order``-th derivative) at ``z``."""
        z = np.asarray(z, dtype=float)
        u = (z - self.shift) / self.half_width
        if self.kind == STANDARD_BUMP:
            val = _std_bump(u, order)
        else:
            val = _cos_bump(u, order, self.power)
        return val / self.half_width**order

    # high-precision twin, used only where double precision cannot resolve a remainder
    def value_mp(self, z):
        u = (mpmath.mpf(z) - self.shift) / self.half_width
        if abs(u) >= 1:
            return mpmath.mpf(0)
        if self.kind == STANDARD_BUMP:
            return mpmath.exp(-1 / (1 - u * u))
        return mpmath.cos(mpmath.pi * u / 2) ** self.power


@dataclass(frozen=True)
class MollifierConstants:
    c0: float
    c1: float


@dataclass(frozen=True)
class Mollifier:
    """``eta(z) = (sum_k poly_coeffs[k] z**k) * base(z)``, vanishing outside [-R, R]."""

    base: BumpProfile
    q: int
    poly_coeffs: tuple[float, ...]
    support_radius: float

    def __call__(self, z, order: int = 0) -> np.ndarray:
        """``eta`` or its ``order``-th derivative at ``z``."""
        z = np.asarray(z, dtype=float)
        coeffs = np.asarray(self.poly_coeffs)
        out = np.zeros_like(z)
        for i in range(order + 1):
            dp = P.polyder(coeffs, i) if i else coeffs
            if not np.any(dp):
                break
            out = out + math.comb(order, i) * P.polyval(z, dp) * self.base(z, order - i)
        return out

    @property
    def support(self) -> tuple[float, float]:
        return self.base.support

    @property
    def is_even(self) -> bool:
        return self.base.is_even

    @cached_property
    def _panel_rule(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = self.support
        edges = np.linspace(lo, hi, _PANELS + 1)
        half = 0.5 * np.diff(edges)
        centre = 0.5 * (edges[1:] + edges[:-1])
        nodes = centre[:, None] + half[:, None] * _GL_NODES[None, :]
        weights = half[:, None] * _GL_WEIGHTS[None, :]
        return edges, nodes, weights

    @cached_property
    def _cumulative(self) -> np.ndarray:
        edges, nodes, weights = self._panel_rule
        per_panel = (self(nodes.ravel()).reshape(nodes.shape) * weights).sum(axis=1)
        return np.concatenate([[0.0], np.cumsum(per_panel)])

    def cdf(self, t) -> np.ndarray:
        """``int_{-inf}^t eta(z) dz``, accurate to roughly machine precision."""
        t = np.asarray(t, dtype=float)
        edges, _, _ = self._panel_rule
        cum = self._cumulative
        tc = np.clip(t, edges[0], edges[-1])
        k = np.clip(np.searchsorted(edges, tc, side="right") - 1, 0, _PANELS - 1)
        left = edges[k]
        half = 0.5 * (tc - left)
        x = (left + half)[..., None] + half[..., None] * _GL_NODES
        partial = (self(x) * _GL_WEIGHTS).sum(axis=-1) * half
        return cum[k] + partial

    @property
    def total_mass(self) -> float:
        return float(self._cumulative[-1])

    def to_dict(self) -> dict:
        return {
            "kind": self.base.kind,
            "half_width": self.base.half_width,
            "shift": self.base.shift,
            "power": self.base.power,
            "q": self.q,
            "poly_coeffs": list(self.poly_coeffs),
            "support_radius": self.support_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mollifier":
        base = BumpProfile(
            data.get("kind", STANDARD_BUMP),
            float(data.get("half_width", 1.0)),
            float(data.get("shift", 0.0)),
            int(data.get("power", 8)),
        )
        if "poly_coeffs" not in data:
            return build_mollifier(base, int(data.get("q", 0)))
        return cls(base, int(data["q"]), tuple(float(c) for c in data["poly_coeffs"]),
                   float(data.get("support_radius", abs(base.shift) + base.half_width)))

    # -- high precision -----------------------------------------------------------

    def coeffs_mp(self, dps: int = 40) -> list:
        """Polynomial coefficients re-solved at ``dps`` digits (same defining system)."""
        return list(_coeffs_mp(self.base, self.q, dps))

    def value_mp(self, z, coeffs) -> mpmath.mpf:
        z = mpmath.mpf(z)
        b = self.base.value_mp(z)
        if b == 0:
            return b
        return mpmath.polyval(list(reversed(coeffs)), z) * b


def _retained_powers(base: BumpProfile, q: int) -> list[int]:
    if base.is_even:
        return list(range(0, q + 1, 2))
    return list(range(q + 1))


def _base_moments(base: BumpProfile, nmax: int, scale: float) -> np.ndarray:
    """int (z/scale)**j base(z) dz for j = 0..nmax via the composite GL rule."""
    lo, hi = base.support
    edges = np.linspace(lo, hi, _PANELS + 1)
    half = 0.5 * np.diff(edges)
    centre = 0.5 * (edges[1:] + edges[:-1])
    z = (centre[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    bz = base(z) * w
    v = z / scale
    return np.array([np.sum(v**j * bz) for j in range(nmax + 1)])


def build_mollifier(
    base: BumpProfile,
    q: int,
    *,
    q_max: int = DEFAULT_Q_MAX,
    condition_threshold: float = CONDITION_THRESHOLD,
) -> Mollifier:
    """Solve for the polynomial factor that gives ``base`` vanishing moments 1..q."""
    if q < 0:
        raise ValueError("q must be non-negative")
    if q > q_max:
        raise ValueError(f"q={q} exceeds the configured cap q_max={q_max}")
    radius = abs(base.shift) + base.half_width
    powers = _retained_powers(base, q)
    mu = _base_moments(base, 2 * q, radius)
    mat = np.array([[mu[n + k] for k in powers] for n in powers])
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > condition_threshold:
        raise SingularMomentMatrix(float(cond), condition_threshold)
    rhs = np.zeros(len(powers))
    rhs[0] = 1.0
    sol = np.linalg.solve(mat, rhs)
    coeffs = np.zeros(q + 1)
    for k, c in zip(powers, sol):
        coeffs[k] = c / radius**k
    return Mollifier(base, q, tuple(float(c) for c in coeffs), radius)


@lru_cache(maxsize=32)
def _coeffs_mp(base: BumpProfile, q: int, dps: int) -> tuple:
    powers = _retained_powers(base, q)
    with mpmath.workdps(dps):
        lo, hi = base.support
        mu = [
            mpmath.quad(lambda z, j=j: z**j * base.value_mp(z), [lo, base.shift, hi])
            for j in range(2 * q + 1)
        ]
        mat = mpmath.matrix([[mu[n + k] for k in powers] for n in powers])
        rhs = mpmath.matrix([1] + [0] * (len(powers) - 1))
        sol = mpmath.lu_solve(mat, rhs)
        coeffs = [mpmath.mpf(0)] * (q + 1)
        for i, k in enumerate(powers):
            coeffs[k] = sol[i]
    return tuple(coeffs)


def moment(m: Mollifier, n: int) -> float:
    """``int z**n eta(z) dz`` by adaptive quadrature."""
    from .quadrature import quad

    if n < 0:
        raise ValueError("moment order must be non-negative")
    lo, hi = m.support
    return quad(lambda z: z**n * m(z), lo, hi, breakpoints=[m.base.shift],
                rel_tol=1e-14, abs_tol=MOMENT_TOL).value


def constants(m: Mollifier) -> MollifierConstants:
    """``C0 = int eta(-x)^2 dx`` and ``C1 = int x eta(-x)^2 dx``."""
    from .quadrature import quad

    lo, hi = -m.support[1], -m.support[0]
    c0 = quad(lambda x: m(-x) ** 2, lo, hi, rel_tol=1e-13, abs_tol=1e-15).value
    c1 = quad(lambda x: x * m(-x) ** 2, lo, hi, rel_tol=1e-13, abs_tol=1e-15).value
    return MollifierConstants(c0, c1)


def eval_scaled(m: Mollifier, eps: float, x) -> np.ndarray:
    """``eta(x / eps) / eps``."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return m(np.asarray(x, dtype=float) / eps) / eps
