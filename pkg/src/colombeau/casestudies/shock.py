"""Travelling shocks for inviscid Burgers and the microscopic-profile product H1 H2'.

In the wave frame a step ``u = (u2 - u1) H + u1`` moving at speed ``c`` has
``u_t = -c u'``.  Pairing the conservative residual ``-c u' + u u'`` fixes
``c``; multiplying the equation by ``u`` first leaves a residual that does not
vanish, which is the inconsistency the generalized-function algebra exposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import gfunc as G
from ..asymptotics import EpsGrid, extrapolate, pairing_sweep, pmap
from ..mollifier import BumpProfile, Mollifier, build_mollifier
from ..quadrature import quad


def default_mollifier() -> Mollifier:
    return build_mollifier(BumpProfile(), 2)


@dataclass(frozen=True)
class Profile:
    """Microscopic shape of a smoothed jump: mollifier plus a shift in units of eps."""

    mollifier: Mollifier = field(default_factory=default_mollifier)
    shift: float = 0.0

    def heaviside(self) -> G.Step:
        return G.HeavisideEmb(self.mollifier, self.shift)

    def to_dict(self) -> dict:
        return {"mollifier": self.mollifier.to_dict(), "shift": self.shift}


@dataclass(frozen=True)
class ShockConfig:
    u1: float = 0.0
    u2: float = 1.0
    profiles: tuple[Profile, Profile] = field(default_factory=lambda: (Profile(), Profile()))
    c: float | None = None
    grid: EpsGrid = EpsGrid()

    @property
    def jump(self) -> float:
        return self.u2 - self.u1

    def state(self) -> G.GFunc:
        """``u = (u2 - u1) H + u1`` built on the first profile."""
        return G.add(G.scale(self.jump, self.profiles[0].heaviside()), self.u1)

    def to_dict(self) -> dict:
        return {"u1": self.u1, "u2": self.u2, "c": self.c,
                "profiles": [p.to_dict() for p in self.profiles],
                "grid": {"eps_max": self.grid.eps_max, "ratio": self.grid.ratio, "count": self.grid.count}}


def _limits(g: G.GFunc, tests, grid: EpsGrid) -> np.ndarray:
    return np.array([pairing_sweep(g, T, grid).limit for T in tests])


@dataclass(frozen=True)
class JumpSpeed:
    c: float
    flux_limits: tuple[float, ...]
    transport_limits: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"c": self.c, "per_test": [{"du": a, "u_du": b}
                                          for a, b in zip(self.transport_limits, self.flux_limits)]}


def burgers_jump_speed(cfg: ShockConfig, tests=None) -> JumpSpeed:
    """Speed ``c`` minimizing the paired residual ``-c <u', T> + <u u', T>`` over the battery.

    The pairing is linear in ``c``, so the least-squares minimizer is
    ``sum(A B) / sum(A^2)`` with ``A = <u', T>`` and ``B = <u u', T>``.
    """
    if cfg.u1 == cfg.u2:
        raise ValueError("equal states: the residual vanishes for every c, so c is undetermined")
    tests = tests or G.default_battery()
    u = cfg.state()
    du = u.derivative()
    A = _limits(du, tests, cfg.grid)
    B = _limits(G.multiply(u, du), tests, cfg.grid)
    c = float(np.dot(A, B) / np.dot(A, A))
    return JumpSpeed(c, tuple(map(float, B)), tuple(map(float, A)))


def burgers_residual(cfg: ShockConfig, c: float, tests=None) -> tuple[float, ...]:
    """Extrapolated ``<-c u' + u u', T>`` per test function."""
    tests = tests or G.default_battery()
    u = cfg.state()
    du = u.derivative()
    r = G.add(G.scale(-c, du), G.multiply(u, du))
    return tuple(map(float, _limits(r, tests, cfg.grid)))


def residual_oracle(u1: float, u2: float) -> float:
    """Coefficient of ``T(0)`` in the limit of ``<u (u_t + u u_x), T>`` at ``c = (u1+u2)/2``.

    From ``int H^n delta T -> T(0)/(n+1)``:
    ``<u^2 u'> - c <u u'> = d T(0) (d^2/3 + u1 d + u1^2 - c (d/2 + u1)) = d^3 T(0)/12``.
    """
    return (u2 - u1) ** 3 / 12.0


@dataclass(frozen=True)
class MultipliedResidual:
    coefficient: float
    per_test: tuple[tuple[str, float, float], ...]
    expected: float

    def to_dict(self) -> dict:
        return {"coefficient": self.coefficient, "expected": self.expected,
                "per_test": [{"test": n, "limit": l, "T0": t} for n, l, t in self.per_test]}


def multiplied_equation_residual(cfg: ShockConfig, tests=None) -> MultipliedResidual:
    """Pair ``u (u_t + u u_x)`` with the battery; the limits are ``k T(0)`` with ``k`` fitted.

    Uses ``c = (u1+u2)/2`` unless the config fixes ``c``.
    """
    tests = tests or G.default_battery()
    c = cfg.c if cfg.c is not None else 0.5 * (cfg.u1 + cfg.u2)
    u = cfg.state()
    du = u.derivative()
    g = G.multiply(u, G.add(G.scale(-c, du), G.multiply(u, du)))
    lims = _limits(g, tests, cfg.grid)
    t0 = np.array([T.value_at(0.0) for T in tests])
    k = float(np.dot(lims, t0) / np.dot(t0, t0))
    per = tuple((T.name, float(l), float(t)) for T, l, t in zip(tests, lims, t0))
    return MultipliedResidual(k, per, residual_oracle(cfg.u1, cfg.u2))


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    limit_err: float
    values: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "limit_err": self.limit_err,
                "values": [{"epsilon": e, "value": v} for e, v in self.values]}


def alpha_integral(p1: Profile, p2: Profile, eps: float) -> float:
    """``int H1_eps H2'_eps dx``; the profiles may use different mollifiers."""
    H1 = p1.heaviside()
    d2 = p2.heaviside().derivative()
    c2, w2 = p2.shift * eps, eps * p2.mollifier.support_radius
    c1, w1 = p1.shift * eps, eps * p1.mollifier.support_radius
    bps = [c1 - w1, c1, c1 + w1, c2]
    f = lambda x: G.evaluate(H1, eps, x) * G.evaluate(d2, eps, x)  # noqa: E731
    return quad(f, c2 - w2, c2 + w2, breakpoints=bps, scale_hint=eps, rel_tol=1e-13, abs_tol=1e-15).value


def alpha_product(p1: Profile, p2: Profile, grid: EpsGrid = EpsGrid()) -> AlphaResult:
    """Coefficient ``alpha`` in ``H1 H2' ~ alpha delta``."""
    eps = grid.values
    vals = np.array(pmap(lambda e: alpha_integral(p1, p2, float(e)), list(eps)))
    lim, err = extrapolate(eps, vals)
    return AlphaResult(lim, err, tuple(zip(map(float, eps), map(float, vals))))
