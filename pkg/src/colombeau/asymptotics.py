"""Numerical eps -> 0 analysis: pairing, extrapolation, power-law classification."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from . import gfunc as G
from .errors import DivergenceDetected, InadmissibleEpsilon, PoorFit
from .mollifier import Mollifier, constants
from .quadrature import quad

DEFAULT_ASSOC_TOL = 1e-4
POOR_FIT_BOUND = 0.25
DEFAULT_DEGREE = 2


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("COLOMBEAU_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded up to ``COLOMBEAU_THREADS`` workers."""
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class EpsGrid:
    """Strictly decreasing geometric sequence ``eps_max * ratio**k``, k < count."""

    eps_max: float = 1e-2
    ratio: float = 0.5
    count: int = 8

    def __post_init__(self):
        if not 0.0 < self.eps_max < 1.0:
            raise ValueError("eps_max must lie in (0, 1)")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.count < 4:
            raise ValueError("an EpsGrid needs at least 4 points")

    @property
    def values(self) -> np.ndarray:
        return self.eps_max * self.ratio ** np.arange(self.count)

    def check_admissible(self, g: G.GFunc) -> None:
        cap = g.max_admissible_eps()
        if self.eps_max > cap * (1 + 1e-12):
            raise InadmissibleEpsilon(f"grid starts at eps={self.eps_max:g} above the cap {cap:g}")


@dataclass(frozen=True)
class AsymptoticFit:
    """``|v(eps)| ~ constant * eps**exponent`` fitted in log-log space."""

    exponent: float
    constant: float
    residual: float
    stderr: float = 0.0
    identically_zero: bool = False

    @property
    def order(self) -> float:
        """Growth order N = -exponent (for moderateness)."""
        return -self.exponent

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent if math.isfinite(self.exponent) else "inf",
            "constant": self.constant,
            "residual": self.residual,
            "stderr": self.stderr,
            "identically_zero": self.identically_zero,
        }


def fit_power_law(eps: Iterable[float], values: Iterable[float], bound: float = POOR_FIT_BOUND,
                  check: bool = True) -> AsymptoticFit:
    """Least-squares line through (log eps, log|v|).

    All-zero data gives ``identically_zero`` with exponent +inf.  A residual
    (largest log deviation) above ``bound`` raises :class:`PoorFit` when ``check``.
    """
    e = np.asarray(list(eps), dtype=float)
    v = np.abs(np.asarray(list(values), dtype=float))
    if np.all(v == 0.0):
        return AsymptoticFit(math.inf, 0.0, 0.0, 0.0, True)
    if np.any(v == 0.0) or not np.all(np.isfinite(v)):
        if check:
            raise PoorFit(math.inf, bound)
        return AsymptoticFit(math.nan, math.nan, math.inf)
    x, y = np.log(e), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    dev = y - A @ coef
    n = len(x)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = float(np.sqrt(np.sum(dev**2) / max(n - 2, 1) / sxx)) if sxx > 0 else 0.0
    fit = AsymptoticFit(float(coef[0]), float(np.exp(coef[1])), float(np.max(np.abs(dev))), stderr)
    if check and fit.residual > bound:
        raise PoorFit(fit.residual, bound)
    return fit


def extrapolate(eps: np.ndarray, values: np.ndarray, degree: int = DEFAULT_DEGREE) -> tuple[float, float]:
    """Limit at eps = 0 of a degree-``degree`` polynomial fit, and its change at degree + 1."""
    e = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    s = e / e.max()
    lim = float(np.polynomial.polynomial.polyfit(s, v, degree)[0])
    hi = min(degree + 1, len(e) - 1)
    lim_hi = float(np.polynomial.polynomial.polyfit(s, v, hi)[0])
    return lim, abs(lim - lim_hi)


@dataclass(frozen=True)
class PairingResult:
    values: tuple[tuple[float, float], ...]
    limit: float
    limit_err: float
    diverges: bool = False
    growth: AsymptoticFit | None = None
    errors: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        errs = self.errors or (0.0,) * len(self.values)
        out = {
            "values": [{"epsilon": e, "value": v, "err": q} for (e, v), q in zip(self.values, errs)],
            "limit": None if self.diverges else self.limit,
            "limit_err": None if self.diverges else self.limit_err,
            "diverges": self.diverges,
        }
        if self.growth is not None:
            out["fit"] = self.growth.to_dict()
        return out


@dataclass(frozen=True)
class AssociationResult:
    associated: bool
    per_test: tuple[tuple[str, float, float], ...]
    margin: float
    assoc_tol: float = DEFAULT_ASSOC_TOL

    def to_dict(self) -> dict:
        return {
            "associated": self.associated,
            "margin": self.margin if math.isfinite(self.margin) else "inf",
            "assoc_tol": self.assoc_tol,
            "per_test": [
                {"test": n, "limit": lim if math.isfinite(lim) else None,
                 "limit_err": err if math.isfinite(err) else None}
                for n, lim, err in self.per_test
            ],
        }


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------

MEASURES = ("line", "radial3d")


def _interval(T: G.TestFunction, measure: str) -> tuple[float, float]:
    lo, hi = T.support
    if measure == "radial3d":
        lo = max(lo, 0.0)
        if hi <= lo:
            raise ValueError("test function has no support on r >= 0")
    elif measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}")
    return lo, hi


def _breakpoints(g: G.GFunc, eps: float) -> list[float]:
    pts = []
    for c, w in g.features(eps):
        pts.extend((c - w, c, c + w))
    return pts


def pair_with_error(g: G.GFunc, T: G.TestFunction, eps: float, *, measure: str = "line",
                    rel_tol: float = 1e-10, abs_tol: float = 1e-13):
    """``int g_eps T dx`` (or ``4 pi int r^2 g_eps T dr``) with the quadrature error estimate."""
    lo, hi = _interval(T, measure)
    if measure == "radial3d":
        f = lambda r: 4.0 * np.pi * r * r * G.evaluate(g, eps, r) * T(r)  # noqa: E731
    else:
        f = lambda x: G.evaluate(g, eps, x) * T(x)  # noqa: E731
    return quad(f, lo, hi, breakpoints=_breakpoints(g, eps), scale_hint=eps,
                rel_tol=rel_tol, abs_tol=abs_tol)


def pair(g: G.GFunc, T: G.TestFunction, eps: float, *, measure: str = "line",
         rel_tol: float = 1e-10, abs_tol: float = 1e-13) -> float:
    """Pairing of the representative ``g_eps`` with ``T``."""
    return pair_with_error(g, T, eps, measure=measure, rel_tol=rel_tol, abs_tol=abs_tol).value


def pair_mp(g: G.GFunc, T: G.TestFunction, eps: float, dps: int = 40, measure: str = "line"):
    """High-precision pairing for remainders far below double-precision roundoff."""
    lo, hi = _interval(T, measure)
    with mpmath.workdps(dps):
        pts = {mpmath.mpf(lo), mpmath.mpf(hi)}
        for p in _breakpoints(g, eps):
            if lo < p < hi:
                pts.add(mpmath.mpf(p))
        e = mpmath.mpf(eps)

        def f(x):
            w = 4 * mpmath.pi * x * x if measure == "radial3d" else 1
            return w * g._eval_mp(e, x, dps) * T.value_mp(x)

        return mpmath.quad(f, sorted(pts))


def _growth_fit(eps: np.ndarray, vals: np.ndarray) -> AsymptoticFit | None:
    """Power-law fit when the sweep grows like eps^-k; None when it stays bounded."""
    mags = np.abs(vals)
    if np.any(mags == 0.0) or not np.all(np.isfinite(mags)):
        return None
    # require sustained growth, not just noise around zero
    if mags[-2:].mean() < 8.0 * mags[:2].mean():
        return None
    raw = fit_power_law(eps, vals, check=False)
    if not raw.exponent < -0.5:
        return None
    k = min((1, 2), key=lambda kk: abs(raw.exponent + kk))
    lead, _ = extrapolate(eps, vals * eps**k)
    scaled = vals * eps**k
    dev = np.log(np.abs(scaled / lead)) if lead != 0 else np.array([math.inf])
    return AsymptoticFit(float(-k), float(lead), float(np.max(np.abs(dev))), raw.stderr)


def pairing_sweep(g: G.GFunc, T: G.TestFunction, grid: EpsGrid = EpsGrid(), *,
                  degree: int = DEFAULT_DEGREE, measure: str = "line",
                  on_divergence: str = "raise", rel_tol: float = 1e-10,
                  abs_tol: float = 1e-13) -> PairingResult:
    """Pair over the grid and extrapolate to eps = 0.

    A sweep that grows like eps^-k (k = 1 or 2) has no limit: it raises
    :class:`DivergenceDetected` or, with ``on_divergence="flag"``, returns a
    result with ``diverges`` set and the growth fit attached.
    """
    if on_divergence not in ("raise", "flag"):
        raise ValueError("on_divergence must be 'raise' or 'flag'")
    grid.check_admissible(g)
    eps = grid.values
    res = pmap(lambda e: pair_with_error(g, T, float(e), measure=measure,
                                         rel_tol=rel_tol, abs_tol=abs_tol), list(eps))
    vals = np.array([r.value for r in res])
    qerr = tuple(float(r.err_est) for r in res)
    values = tuple((float(e), float(v)) for e, v in zip(eps, vals))
    growth = _growth_fit(eps, vals)
    if growth is not None:
        if on_divergence == "raise":
            raise DivergenceDetected(growth, values)
        return PairingResult(values, math.nan, math.inf, True, growth, qerr)
    lim, err = extrapolate(eps, vals, degree)
    return PairingResult(values, lim, err, False, None, qerr)


def associate(g, h, tests: Sequence[G.TestFunction] | None = None, grid: EpsGrid = EpsGrid(), *,
              assoc_tol: float = DEFAULT_ASSOC_TOL, measure: str = "line") -> AssociationResult:
    """Check ``g ~ h`` on a finite battery of test functions."""
    tests = tuple(tests) if tests is not None else G.default_battery()
    diff = G.add(g, G.scale(-1.0, G.as_gfunc(h)))
    per_test = []
    for T in tests:
        r = pairing_sweep(diff, T, grid, measure=measure, on_divergence="flag")
        per_test.append((T.name, r.limit, r.limit_err))
    ok = all(math.isfinite(l) and abs(l) <= assoc_tol and e < assoc_tol for _, l, e in per_test)
    margin = max((abs(l) if math.isfinite(l) else math.inf) for _, l, _ in per_test)
    return AssociationResult(ok, tuple(per_test), margin, assoc_tol)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def _probe_points(g: G.GFunc, probe, eps: float) -> np.ndarray:
    if isinstance(probe, G.TestFunction):
        lo, hi = probe.support
        pts = list(np.linspace(lo, hi, 201))
        for c, w in g.features(eps):
            pts.extend(c + w * np.linspace(-1.0, 1.0, 41))
        return np.array([p for p in pts if lo <= p <= hi])
    return np.atleast_1d(np.asarray(probe, dtype=float))


def sup_norm(g: G.GFunc, eps: float, probe=0.0, dps: int | None = None) -> float:
    """``max |g_eps|`` over the probe points (mpmath evaluation when ``dps`` is set)."""
    pts = _probe_points(g, probe, eps)
    if dps is None:
        return float(np.max(np.abs(G.evaluate(g, eps, pts))))
    return float(max(abs(G.evaluate_mp(g, eps, float(p), dps)) for p in pts))


def moderateness_order(g: G.GFunc, probe=0.0, grid: EpsGrid = EpsGrid()) -> AsymptoticFit:
    """Fit ``sup |g_eps| ~ eps^-N`` at a point (or over a test function's support)."""
    grid.check_admissible(g)
    eps = grid.values
    sups = pmap(lambda e: sup_norm(g, float(e), probe), list(eps))
    return fit_power_law(eps, sups)


def sifting_order(m: Mollifier, T: G.TestFunction, grid: EpsGrid = EpsGrid(), *,
                  dps: int = 40) -> AsymptoticFit:
    """Decay exponent of ``|<delta_eps, T> - T(0)|``.

    The remainder reaches 1e-25 on the default grid, so pairings run in mpmath
    at ``dps`` digits with mollifier coefficients re-solved at that precision.
    """
    if T.value_at(0.0) == 0.0:
        raise ValueError("sifting needs a test function with T(0) != 0")
    delta = G.DeltaEmb(m)
    eps = grid.values
    with mpmath.workdps(dps):
        t0 = T.value_mp(0)
        rem = pmap(lambda e: float(abs(pair_mp(delta, T, float(e), dps) - t0)), list(eps))
    return fit_power_law(eps, rem)


@dataclass(frozen=True)
class NegligibilityResult:
    fit: AsymptoticFit
    q_max: float
    negligible: bool
    values: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {"fit": self.fit.to_dict(), "q_max": self.q_max, "negligible": self.negligible,
                "values": [{"epsilon": e, "value": v} for e, v in self.values]}


NEGLIGIBILITY_SLACK = 0.1


def negligibility_check(g: G.GFunc, q_max: float, probe=None, grid: EpsGrid = EpsGrid(), *,
                        dps: int | None = None, slack: float = NEGLIGIBILITY_SLACK) -> NegligibilityResult:
    """Fit the decay of ``sup |g_eps|`` and test ``exponent >= q_max - slack`` (less two standard errors).

    ``dps`` switches evaluation to mpmath, needed once the decay drops below
    1e-13; values under ``10**-(dps - 8)`` then count as exact zeros.
    """
    if probe is None:
        probe = np.linspace(-2.0, 2.0, 9)
    grid.check_admissible(g)
    eps = grid.values
    sups = pmap(lambda e: sup_norm(g, float(e), probe, dps), list(eps))
    if dps is not None:
        floor = 10.0 ** -(dps - 8)
        sups = [0.0 if s < floor else s for s in sups]
    fit = fit_power_law(eps, sups)
    ok = fit.identically_zero or fit.exponent + 2.0 * fit.stderr >= q_max - slack
    return NegligibilityResult(fit, q_max, bool(ok), tuple(zip(map(float, eps), sups)))


# ---------------------------------------------------------------------------
# delta-square expansion and cut-off integration formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSquareExpansion:
    """``eps <delta_eps^2, T> = c0 + c1 eps + ...`` against ``C0 T(0)`` and ``C1 T'(0)``."""

    c0: float
    c1: float
    expected_c0: float
    expected_c1: float
    values: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "expected_c0": self.expected_c0,
                "expected_c1": self.expected_c1,
                "values": [{"epsilon": e, "value": v} for e, v in self.values]}


def delta_square_expansion(m: Mollifier, T: G.TestFunction, grid: EpsGrid = EpsGrid(),
                           degree: int = DEFAULT_DEGREE) -> DeltaSquareExpansion:
    d = G.DeltaEmb(m)
    d2 = G.multiply(d, d)
    eps = grid.values
    vals = np.array(pmap(lambda e: float(e) * pair(d2, T, float(e)), list(eps)))
    coef = np.polynomial.polynomial.polyfit(eps, vals, degree)
    k = constants(m)
    return DeltaSquareExpansion(float(coef[0]), float(coef[1]), k.c0 * T.value_at(0.0),
                                k.c1 * T.derivative_at(0.0, 1), tuple(zip(map(float, eps), vals)))


@dataclass(frozen=True)
class FormulaCheck:
    name: str
    computed: float
    expected: float
    tol: float

    @property
    def rel_err(self) -> float:
        return abs(self.computed - self.expected) / max(abs(self.expected), 1e-300)

    @property
    def passed(self) -> bool:
        return self.rel_err <= self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "computed": self.computed, "expected": self.expected,
                "rel_err": self.rel_err, "tol": self.tol, "passed": self.passed}


@dataclass(frozen=True)
class UpsReport:
    a: float
    eps: float
    checks: tuple[FormulaCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> FormulaCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"a": self.a, "eps": self.eps, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def verify_ups_formulas(m: Mollifier, a: float = 0.1, eps: float = 1e-3,
                        T: G.TestFunction | None = None, sigma: float = G.DEFAULT_SIGMA,
                        tol: float = 1e-4, square_tol: float = 1e-2,
                        energy_tol: float = 1e-2) -> UpsReport:
    """Check the cut-off integration formulas at finite ``(a, eps)`` on the half line.

    ``int Ups F``, ``int Ups' T``, ``int Ups Ups' T`` and the ``(Ups')^2`` energy
    formula are compared with their eps -> 0 values.  ``int Ups^2 F`` differs
    from ``int_a^inf F`` at O(eps) and gets the looser ``square_tol``.
    """
    T = T or G.TestFunction.bump(0.0, 1.0, "T0")
    U = G.Ups(m, a, 0, sigma)
    U.check(eps)
    Up = U.derivative()
    lo, hi = max(T.support[0], 0.0), T.support[1]
    w = eps * m.support_radius
    bps = [a - w, a, a + w]

    def integral(f, start=lo):
        return quad(f, start, hi, breakpoints=bps, scale_hint=eps, rel_tol=1e-12, abs_tol=1e-15).value

    def u(r):
        return G.evaluate(U, eps, r)

    def up(r):
        return G.evaluate(Up, eps, r)

    Fs = {
        "T": lambda r: T(r),
        "T/r": lambda r: np.where(r > 0, T(r) / np.where(r > 0, r, 1.0), 0.0),
        "T/r^2": lambda r: np.where(r > 0, T(r) / np.where(r > 0, r, 1.0) ** 2, 0.0),
    }
    checks = []
    for name, F in Fs.items():
        tail = integral(F, a)
        checks.append(FormulaCheck(f"int Ups {name}", integral(lambda r: u(r) * F(r)), tail, tol))
        checks.append(FormulaCheck(f"int Ups^2 {name}", integral(lambda r: u(r) ** 2 * F(r)), tail,
                                   square_tol))
    Ta = T.value_at(a)
    checks.append(FormulaCheck("int Ups' T", integral(lambda r: up(r) * T(r)), Ta, tol))
    checks.append(FormulaCheck("int Ups Ups' T", integral(lambda r: u(r) * up(r) * T(r)), 0.5 * Ta, tol))
    k = constants(m)
    energy = eps * integral(lambda r: up(r) ** 2 * T(r))
    checks.append(FormulaCheck("eps int (Ups')^2 T", energy,
                               k.c0 * Ta + eps * k.c1 * T.derivative_at(a, 1), energy_tol))
    return UpsReport(a, eps, tuple(checks))


def half_identity(m: Mollifier, eps: float, shift: float = 0.0) -> float:
    """``int H_eps H'_eps dx`` over the whole line (exactly 1/2 for any eps)."""
    H = G.HeavisideEmb(m, shift)
    d = H.derivative()
    c = shift * eps
    w = eps * m.support_radius
    f = lambda x: G.evaluate(H, eps, x) * G.evaluate(d, eps, x)  # noqa: E731
    return quad(f, c - w, c + w, breakpoints=[c], scale_hint=eps, rel_tol=1e-13, abs_tol=1e-15).value
