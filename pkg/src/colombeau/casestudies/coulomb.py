"""Regularized point charge: potential, field, density, total charge, self-energy.

The potential is ``phi = (e/r) Ups(r)`` with cut-off radius ``a``.  Every other
quantity is derived from it by the tree calculus, so the algebra that produces
the density and the energy density is the engine's, not hand-coded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from .. import gfunc as G
from ..asymptotics import pair, pmap
from ..errors import InadmissibleEpsilon
from ..mollifier import BumpProfile, Mollifier, build_mollifier, constants
from ..quadrature import quad


def default_mollifier() -> Mollifier:
    return build_mollifier(BumpProfile(), 2)


@dataclass(frozen=True)
class CoulombConfig:
    """Charge ``e``, cut-off ``a``, regularization ``eps`` and radial truncation ``r_max``."""

    e: float = 1.0
    a: float = 0.1
    eps: float = 1e-3
    r_max: float | None = None
    mollifier: Mollifier = field(default_factory=default_mollifier)
    sigma: float = G.DEFAULT_SIGMA

    def __post_init__(self):
        if self.r_max is None:
            object.__setattr__(self, "r_max", 1e3 * self.a)
        cap = self.a / (self.mollifier.support_radius * self.sigma)
        if not 0.0 < self.eps <= cap * (1 + 1e-12):
            raise InadmissibleEpsilon(f"need 0 < eps <= a/(R sigma) = {cap:g}, got eps={self.eps:g}")
        if not self.a < self.r_max:
            raise ValueError("need a < r_max")

    @property
    def ups(self) -> G.Ups:
        return G.Ups(self.mollifier, self.a, 0, self.sigma)

    def to_dict(self) -> dict:
        return {"e": self.e, "a": self.a, "eps": self.eps, "r_max": self.r_max,
                "sigma": self.sigma, "mollifier": self.mollifier.to_dict()}


def coulomb_potential(cfg: CoulombConfig) -> G.GFunc:
    return G.scale(cfg.e, G.PowerCutoff(cfg.mollifier, 1, cfg.a, 0, cfg.sigma))


def coulomb_field(cfg: CoulombConfig) -> G.GFunc:
    """Radial field ``E_r = -d phi/dr = e (Ups/r^2 - Ups'/r)``."""
    return G.scale(-1.0, coulomb_potential(cfg).derivative())


def hand_built_field(cfg: CoulombConfig) -> G.GFunc:
    U = cfg.ups
    return G.scale(cfg.e, G.add(G.radial_power(-2, U), G.scale(-1.0, G.radial_power(-1, U.derivative()))))


def radial_divergence(Er: G.GFunc) -> G.GFunc:
    """``r^-2 d/dr (r^2 E_r)`` for a radial field, reduced to canonical form."""
    raw = G.radial_power(-2, G.radial_power(2, Er).derivative())
    return G.from_expansion(G.expand(raw))


def charge_density(cfg: CoulombConfig) -> G.GFunc:
    """``rho = div E / (4 pi)``; reduces to ``-e Ups''/(4 pi r)``."""
    return G.scale(1.0 / (4.0 * math.pi), radial_divergence(coulomb_field(cfg)))


def five_term_density(cfg: CoulombConfig) -> G.GFunc:
    """Density from the field written with embedded ``H(r-a)/r^2`` instead of ``Ups/r^2``.

    ``4 pi rho = e ( 2/r [H_a/r^2] - 2 [H_a/r^3] + Ups'/a^2 - 2 Ups'/(a r) - Ups''/a )``.
    Two Heaviside-type terms cancel as eps -> 0; the three delta-type terms carry
    the charge.  Pointwise it differs from :func:`charge_density`; the two are
    associated.
    """
    m, a = cfg.mollifier, cfg.a
    r = G.X
    h2 = G.ConvEmbed.of(m, sympy.Heaviside(r - a) / r**2, [a])
    h3 = G.ConvEmbed.of(m, sympy.Heaviside(r - a) / r**3, [a])
    Up = G.Ups(m, a, 1, cfg.sigma)
    Upp = Up.derivative()
    terms = G.add(
        G.scale(2.0, G.radial_power(-1, h2)),
        G.scale(-2.0, h3),
        G.scale(1.0 / a**2, Up),
        G.scale(-2.0 / a, G.radial_power(-1, Up)),
        G.scale(-1.0 / a, Upp),
    )
    return G.scale(cfg.e / (4.0 * math.pi), terms)


def five_term_reference(cfg: CoulombConfig, r: float) -> float:
    """Independent evaluation of the five-term density by direct z-integrals (scipy)."""
    from scipy.integrate import quad as squad

    m, a, eps, e = cfg.mollifier, cfg.a, cfg.eps, cfg.e
    lo, hi = m.support
    zlo = max((a - r) / eps, lo)
    if zlo >= hi:
        i2 = i3 = 0.0
    else:
        i2 = squad(lambda z: float(m(z)) / (r + eps * z) ** 2, zlo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
        i3 = squad(lambda z: float(m(z)) / (r + eps * z) ** 3, zlo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
    t = (a - r) / eps
    eta, deta = float(m(t)), float(m(t, 1))
    val = (2.0 / r) * i2 - 2.0 * i3 - 2.0 * eta / (eps * a * r) + eta / (eps * a * a) + deta / (eps**2 * a)
    return e * val / (4.0 * math.pi)


def radial_pair(g: G.GFunc, T: G.TestFunction, eps: float) -> float:
    """``4 pi int_0^inf r^2 g_eps(r) T(r) dr``."""
    return pair(g, T, eps, measure="radial3d")


@dataclass(frozen=True)
class ASweep:
    """Values over cut-off radii ``a`` (with ``eps = a * eps_ratio``) and the a -> 0 extrapolation."""

    values: tuple[tuple[float, float], ...]
    limit: float
    expected: float
    degree: int

    @property
    def rel_err(self) -> float:
        return abs(self.limit - self.expected) / abs(self.expected)

    def to_dict(self) -> dict:
        return {"values": [{"a": a, "value": v} for a, v in self.values], "limit": self.limit,
                "expected": self.expected, "rel_err": self.rel_err, "degree": self.degree}


DEFAULT_A_VALUES = (0.2, 0.1, 0.05, 0.025)


def charge_test_function() -> G.TestFunction:
    """Wide bump: keeps the O(a^2) curvature term small so a linear a-extrapolation suffices."""
    return G.TestFunction.bump(0.0, 4.0, "T_wide")


def total_charge(e: float = 1.0, a_values=DEFAULT_A_VALUES, eps_ratio: float = 1e-2,
                 T: G.TestFunction | None = None, mollifier: Mollifier | None = None,
                 form: str = "ups", degree: int = 1) -> ASweep:
    """``4 pi int r^2 rho T dr`` over an a-sweep, extrapolated to a = 0 (expected ``e T(0)``)."""
    T = T or charge_test_function()
    m = mollifier or default_mollifier()
    builders = {"ups": charge_density, "five-term": five_term_density}
    if form not in builders:
        raise ValueError(f"form must be one of {sorted(builders)}")

    def one(a):
        cfg = CoulombConfig(e, a, a * eps_ratio, mollifier=m)
        return radial_pair(builders[form](cfg), T, cfg.eps)

    vals = pmap(one, list(a_values))
    coef = np.polynomial.polynomial.polyfit(np.asarray(a_values, dtype=float), vals, degree)
    return ASweep(tuple(zip(map(float, a_values), map(float, vals))), float(coef[0]),
                  e * T.value_at(0.0), degree)


def enclosed_charge(cfg: CoulombConfig, r: float) -> float:
    """``int_0^r 4 pi s^2 rho(s) ds``."""
    rho = charge_density(cfg)
    w = cfg.eps * cfg.mollifier.support_radius
    f = lambda s: 4.0 * math.pi * s * s * G.evaluate(rho, cfg.eps, s)  # noqa: E731
    return quad(f, 0.0, r, breakpoints=[cfg.a - w, cfg.a, cfg.a + w], scale_hint=cfg.eps,
                rel_tol=1e-12, abs_tol=1e-14).value


def gauss_check(cfg: CoulombConfig, radii=None) -> list[dict]:
    """Enclosed charge against the surface term ``r^2 E_r(r)`` at several radii."""
    radii = radii or (10 * cfg.a, 100 * cfg.a, 0.5 * cfg.r_max)
    Er = coulomb_field(cfg)
    out = []
    for r in radii:
        q = enclosed_charge(cfg, r)
        s = r * r * G.evaluate(Er, cfg.eps, r)
        out.append({"r": r, "enclosed": q, "surface": s, "diff": abs(q - s)})
    return out


@dataclass(frozen=True)
class SelfEnergy:
    """``value = term1 + term2 + term3``; ``term1`` already includes the analytic tail beyond r_max."""

    value: float
    term1: float
    term2: float
    term3: float
    tail: float
    expected: float

    @property
    def cancellation(self) -> float:
        """``|term1 + term2| / |term1|``."""
        return abs(self.term1 + self.term2) / abs(self.term1)

    def to_dict(self) -> dict:
        return {"value": self.value, "breakdown": [self.term1, self.term2, self.term3],
                "tail": self.tail, "expected": self.expected,
                "rel_err": abs(self.value - self.expected) / abs(self.expected),
                "cancellation": self.cancellation}


def energy_density_terms(cfg: CoulombConfig) -> tuple[G.GFunc, G.GFunc, G.GFunc]:
    """Monomials of ``(e^2/2) r^2 E_r^2`` grouped as ``Ups^2/r^2``, ``Ups Ups'/r``, ``(Ups')^2``."""
    Er = coulomb_field(cfg)
    dens = G.expand(G.scale(0.5, G.radial_power(2, G.multiply(Er, Er))))
    groups: dict[int, dict] = {-2: {}, -1: {}, 0: {}}
    for key, c in dens.items():
        groups[key[0]][key] = c
    return tuple(G.from_expansion(groups[p]) for p in (-2, -1, 0))


def self_energy(cfg: CoulombConfig, rel_tol: float = 1e-12) -> SelfEnergy:
    """Field energy ``(1/2) int r^2 E_r^2 dr`` (angular factor dropped), term by term.

    Terms are integrated on [0, r_max]; ``e^2/(2 r_max)`` is added to the
    ``Ups^2/r^2`` term for the truncated tail, after which terms one and two
    cancel exactly and the total is the ``(Ups')^2`` term.
    """
    eps = cfg.eps
    w = eps * cfg.mollifier.support_radius
    bps = [cfg.a - w, cfg.a, cfg.a + w]
    terms = energy_density_terms(cfg)

    def integrate(g):
        f = lambda r: G.evaluate(g, eps, r)  # noqa: E731
        return quad(f, 0.0, cfg.r_max, breakpoints=bps, scale_hint=eps, rel_tol=rel_tol,
                    abs_tol=1e-14).value

    t1, t2, t3 = pmap(integrate, list(terms))
    tail = cfg.e**2 / (2.0 * cfg.r_max)
    t1 += tail
    expected = 0.5 * cfg.e**2 * constants(cfg.mollifier).c0 / eps
    return SelfEnergy(t1 + t2 + t3, t1, t2, t3, tail, expected)
