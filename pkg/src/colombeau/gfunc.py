"""Generalized functions as expression trees over eps-dependent representatives.

Every node evaluates, for a given ``eps`` and array of points ``x``, to the value
of one smooth representative ``g_eps(x)``.  Products and sums act pointwise on
representatives, so distributions can be multiplied freely.  Differentiation is
structural: leaf rules are exact (``H' = delta``, ``Ups' = UpsPrime``) and
Leibniz/chain rules push derivatives down to the leaves when ``derivative`` is
called, so no unexpanded derivative node ever sits above a product.

Radial trees use ``x`` as the radius ``r``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from numbers import Real
from typing import Callable, Iterable

import mpmath
import numpy as np
import sympy

from .errors import (
    DerivativeOrderExhausted,
    InadmissibleEpsilon,
    MixedMollifier,
    UnsupportedNode,
)
from .mollifier import BumpProfile, Mollifier

X = sympy.Symbol("x", real=True)
DEFAULT_SIGMA = 4.0

# z-space rule for ConvEmbed: panels per sub-interval times Gauss-Legendre nodes
_CONV_PANELS = 16
_CONV_GL = np.polynomial.legendre.leggauss(20)


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


@lru_cache(maxsize=512)
def _lambdify(expr: sympy.Expr, module: str = "numpy") -> Callable:
    if module == "numpy":
        expr = sympy.piecewise_fold(expr.rewrite(sympy.Piecewise))
    return sympy.lambdify(X, expr, modules=module)


class GFunc:
    """Base class: operator overloading, evaluation entry points, traversal."""

    # -- algebra --------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, scale(-1.0, as_gfunc(other)))

    def __rsub__(self, other):
        return add(other, scale(-1.0, self))

    def __mul__(self, other):
        if isinstance(other, Real):
            return scale(float(other), self)
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Real):
            return scale(float(other), self)
        return multiply(other, self)

    def __truediv__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return scale(1.0 / float(other), self)

    def __neg__(self):
        return scale(-1.0, self)

    def __pow__(self, k):
        return power(self, k)

    # -- evaluation -----------------------------------------------------------
    def __call__(self, eps: float, x) -> np.ndarray:
        return evaluate(self, eps, x)

    def _eval(self, eps: float, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _eval_mp(self, eps, x, dps: int):
        raise NotImplementedError(f"{type(self).__name__} has no high-precision evaluator")

    def derivative(self) -> "GFunc":
        raise NotImplementedError

    def children(self) -> tuple["GFunc", ...]:
        return ()

    def _own_mollifiers(self) -> tuple[Mollifier, ...]:
        return ()

    def _own_features(self, eps: float) -> list[tuple[float, float]]:
        return []

    # -- traversal --------------------------------------------------------------
    def walk(self) -> Iterable["GFunc"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def mollifiers(self) -> set[Mollifier]:
        return {m for node in self.walk() for m in node._own_mollifiers()}

    def features(self, eps: float) -> list[tuple[float, float]]:
        """Points where the representative varies on scale eps, as (centre, half-width)."""
        return [f for node in self.walk() for f in node._own_features(eps)]

    def max_admissible_eps(self) -> float:
        """Largest eps accepted by every cut-off leaf (1.0 when there is none)."""
        caps = [node.eps_cap for node in self.walk() if isinstance(node, Ups)]
        return min(caps, default=1.0)


def evaluate(g: GFunc, eps: float, x) -> np.ndarray:
    """Value of the representative ``g_eps`` at ``x`` (scalar or array)."""
    _check_eps(eps)
    xa = _as_array(x)
    out = g._eval(eps, np.atleast_1d(xa))
    out = np.broadcast_to(out, np.atleast_1d(xa).shape).astype(float)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def evaluate_mp(g: GFunc, eps, x, dps: int = 40):
    """High-precision value of ``g_eps(x)`` (supported for smooth, embedded and algebra nodes)."""
    with mpmath.workdps(dps):
        return g._eval_mp(mpmath.mpf(eps), mpmath.mpf(x), dps)


def derivative(g: GFunc) -> GFunc:
    return g.derivative()


# ---------------------------------------------------------------------------
# leaves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Smooth(GFunc):
    """A classical smooth function of ``x``.

    Either a sympy expression (unlimited derivatives) or a tuple of callables
    ``(f, f', f'', ...)`` whose length bounds how often it can be differentiated.
    """

    expr: sympy.Expr | None = None
    funcs: tuple[Callable, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.expr is None and not self.funcs:
            raise ValueError("Smooth needs an expression or at least one callable")
        if self.expr is not None:
            object.__setattr__(self, "expr", sympy.sympify(self.expr))

    @classmethod
    def of(cls, expr) -> "Smooth":
        if isinstance(expr, str):
            expr = sympy.sympify(expr, locals={"x": X})
        return cls(expr=sympy.sympify(expr))

    @classmethod
    def constant(cls, c: float) -> "Smooth":
        return cls(expr=sympy.Float(c) if not float(c).is_integer() else sympy.Integer(int(c)))

    @classmethod
    def from_callables(cls, *funcs: Callable, name: str = "") -> "Smooth":
        return cls(funcs=tuple(funcs), name=name)

    @property
    def is_constant(self) -> bool:
        return self.expr is not None and not self.expr.has(X)

    @property
    def constant_value(self) -> float:
        return float(self.expr)

    def _eval(self, eps, x):
        if self.expr is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.broadcast_to(np.asarray(_lambdify(self.expr)(x), dtype=float), x.shape)
        return np.broadcast_to(np.asarray(self.funcs[0](x), dtype=float), x.shape)

    def _eval_mp(self, eps, x, dps):
        if self.expr is None:
            return mpmath.mpf(self.funcs[0](float(x)))
        return mpmath.mpf(_lambdify(self.expr, "mpmath")(x))

    def derivative(self) -> GFunc:
        if self.expr is not None:
            return Smooth(expr=sympy.diff(self.expr, X))
        if len(self.funcs) < 2:
            raise DerivativeOrderExhausted(
                f"smooth leaf {self.name or self.funcs[0]!r} has no further declared derivative"
            )
        return Smooth(funcs=self.funcs[1:], name=self.name + "'")

    def __repr__(self):
        if self.expr is not None:
            return f"Smooth({self.expr})"
        return f"Smooth({self.name or 'f'}, order<{len(self.funcs)})"


ZERO = Smooth.constant(0)
ONE = Smooth.constant(1)


def as_gfunc(value) -> GFunc:
    if isinstance(value, GFunc):
        return value
    if isinstance(value, Real):
        return Smooth.constant(float(value))
    if isinstance(value, (str, sympy.Basic)):
        return Smooth.of(value)
    raise TypeError(f"cannot interpret {value!r} as a generalized function")


def _is_const(g: GFunc, value: float | None = None) -> bool:
    if not (isinstance(g, Smooth) and g.is_constant):
        return False
    return value is None or g.constant_value == value


def _signed_kernel(m: Mollifier, order: int, eps: float, t: np.ndarray) -> np.ndarray:
    """(-1)^(order-1) eps^-order eta^(order-1)(t): the order-th derivative of a step."""
    return (-1.0) ** (order - 1) * eps ** (-order) * m(t, order - 1)


@dataclass(frozen=True)
class Step(GFunc):
    """Embedded Heaviside function (``order`` = 0) or its derivatives.

    ``H_eps(x) = int_{-inf}^{y/eps} eta(-z) dz`` with ``y = x - shift*eps``; the
    derivative of order k >= 1 is ``(-1)^(k-1) eps^-k eta^(k-1)(-y/eps)``, so
    order 1 is ``delta_eps(y) = eta(-y/eps)/eps``.  ``shift`` moves the
    microscopic profile in units of eps.
    """

    mollifier: Mollifier
    order: int = 0
    shift: float = 0.0

    def _t(self, eps, x):
        return -(x - self.shift * eps) / eps

    def _eval(self, eps, x):
        t = self._t(eps, x)
        m = self.mollifier
        if self.order == 0:
            return m.total_mass - m.cdf(t)
        return _signed_kernel(m, self.order, eps, t)

    def _eval_mp(self, eps, x, dps):
        coeffs = self.mollifier.coeffs_mp(dps)
        t = -(x - self.shift * eps) / eps
        return _step_mp(self.mollifier, coeffs, self.order, eps, t)

    def derivative(self):
        return Step(self.mollifier, self.order + 1, self.shift)

    def _own_mollifiers(self):
        return (self.mollifier,)

    def _own_features(self, eps):
        return [(self.shift * eps, eps * self.mollifier.support_radius)]

    def __repr__(self):
        tag = "H" if self.order == 0 else ("delta" if self.order == 1 else f"H^({self.order})")
        return f"{tag}[shift={self.shift:g}, q={self.mollifier.q}, {self.mollifier.base.kind}]"


def _step_mp(m: Mollifier, coeffs, order: int, eps, t):
    lo, hi = m.support
    eta = lambda z: m.value_mp(z, coeffs)  # noqa: E731
    if order == 0:
        if t <= lo:
            return mpmath.mpf(1)
        upper = min(t, mpmath.mpf(hi))
        return 1 - mpmath.quad(eta, [lo, upper])
    if order == 1:
        return eta(t) / eps
    raise NotImplementedError("high-precision step derivatives beyond first order")


def HeavisideEmb(m: Mollifier, shift: float = 0.0) -> Step:
    return Step(m, 0, shift)


def DeltaEmb(m: Mollifier, shift: float = 0.0) -> Step:
    return Step(m, 1, shift)


@dataclass(frozen=True)
class Ups(GFunc):
    """Radial cut-off ``Upsilon`` with cut-off radius ``a`` and its derivatives.

    ``order`` 0 is ``int_{(a-r)/eps}^inf eta(z) dz``; order k >= 1 is
    ``(-1)^(k-1) eps^-k eta^(k-1)((a-r)/eps)``.  Evaluation demands
    ``eps <= a / (R * sigma)``, which keeps the representative identically zero
    on ``[0, a - eps R]``.
    """

    mollifier: Mollifier
    a: float
    order: int = 0
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("cut-off radius a must be positive")

    @property
    def eps_cap(self) -> float:
        return self.a / (self.mollifier.support_radius * self.sigma)

    def check(self, eps: float) -> None:
        if eps > self.eps_cap * (1 + 1e-12):
            raise InadmissibleEpsilon(
                f"eps={eps:g} exceeds a/(R*sigma)={self.eps_cap:g} for cut-off a={self.a:g}"
            )

    def _eval(self, eps, x):
        self.check(eps)
        m = self.mollifier
        t = (self.a - x) / eps
        if self.order == 0:
            return m.total_mass - m.cdf(t)
        return _signed_kernel(m, self.order, eps, t)

    def _eval_mp(self, eps, x, dps):
        self.check(float(eps))
        coeffs = self.mollifier.coeffs_mp(dps)
        return _step_mp(self.mollifier, coeffs, self.order, eps, (self.a - x) / eps)

    def derivative(self):
        return Ups(self.mollifier, self.a, self.order + 1, self.sigma)

    def _own_mollifiers(self):
        return (self.mollifier,)

    def _own_features(self, eps):
        return [(self.a, eps * self.mollifier.support_radius)]

    def __repr__(self):
        return f"Ups{chr(39) * self.order}[a={self.a:g}, q={self.mollifier.q}, {self.mollifier.base.kind}]"


def UpsPrime(m: Mollifier, a: float, sigma: float = DEFAULT_SIGMA) -> Ups:
    return Ups(m, a, 1, sigma)


@dataclass(frozen=True)
class ConvEmbed(GFunc):
    """Embedding ``f_eps(x) = int eta(z) f(x + eps z) dz`` of a piecewise smooth ``f``.

    With ``kernel_order`` k the node is the k-th derivative,
    ``(-1/eps)^k int eta^(k)(z) f(x + eps z) dz``.  The z-integral is split at
    the images of ``f``'s breakpoints so each piece is smooth.
    """

    mollifier: Mollifier
    func: Callable | None = None
    expr: sympy.Expr | None = None
    breakpoints: tuple[float, ...] = ()
    kernel_order: int = 0

    def __post_init__(self):
        if self.func is None and self.expr is None:
            raise ValueError("ConvEmbed needs a callable or an expression")

    @classmethod
    def of(cls, m: Mollifier, f, breakpoints: Iterable[float] = ()) -> "ConvEmbed":
        """Embed ``f`` (sympy expression, string, or vectorized callable)."""
        if callable(f) and not isinstance(f, sympy.Basic):
            return cls(m, func=f, breakpoints=tuple(sorted(float(b) for b in breakpoints)))
        expr = sympy.sympify(f, locals={"x": X}) if isinstance(f, str) else sympy.sympify(f)
        bps = set(float(b) for b in breakpoints) | set(_detect_breakpoints(expr))
        return cls(m, expr=expr, breakpoints=tuple(sorted(bps)))

    def _f(self, y):
        if self.func is not None:
            return np.asarray(self.func(y), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.broadcast_to(np.asarray(_lambdify(self.expr)(y), dtype=float), y.shape)

    def _eval(self, eps, x):
        m = self.mollifier
        zlo, zhi = m.support
        cuts = [np.full(x.shape, zlo)]
        cuts += [np.clip((d - x) / eps, zlo, zhi) for d in self.breakpoints]
        cuts.append(np.full(x.shape, zhi))
        edges = np.sort(np.stack(cuts, axis=-1), axis=-1)
        nodes, weights = _CONV_GL
        frac = np.linspace(0.0, 1.0, _CONV_PANELS + 1)
        total = np.zeros(x.shape)
        for j in range(edges.shape[-1] - 1):
            lo, hi = edges[..., j], edges[..., j + 1]
            width = hi - lo
            for p in range(_CONV_PANELS):
                a = lo + frac[p] * width
                b = lo + frac[p + 1] * width
                half = 0.5 * (b - a)
                z = (0.5 * (a + b))[..., None] + half[..., None] * nodes
                vals = m(z, self.kernel_order) * self._f(x[..., None] + eps * z)
                total += half * (vals @ weights)
        return (-1.0 / eps) ** self.kernel_order * total

    def _eval_mp(self, eps, x, dps):
        if self.kernel_order:
            raise NotImplementedError("high-precision evaluation of differentiated embeddings")
        if self.expr is None:
            raise NotImplementedError("high-precision evaluation needs a symbolic f")
        m = self.mollifier
        coeffs = m.coeffs_mp(dps)
        f = _lambdify(self.expr, "mpmath")
        zlo, zhi = (mpmath.mpf(v) for v in m.support)
        pts = sorted({zlo, zhi, *[(d - x) / eps for d in self.breakpoints if zlo < (d - x) / eps < zhi]})
        return mpmath.quad(lambda z: m.value_mp(z, coeffs) * f(x + eps * z), pts)

    def derivative(self):
        return ConvEmbed(self.mollifier, self.func, self.expr, self.breakpoints, self.kernel_order + 1)

    def _own_mollifiers(self):
        return (self.mollifier,)

    def _own_features(self, eps):
        return [(d, eps * self.mollifier.support_radius) for d in self.breakpoints]

    def __repr__(self):
        f = self.expr if self.expr is not None else getattr(self.func, "__name__", "f")
        tick = chr(39) * self.kernel_order
        return f"[{f}]{tick}"


def _detect_breakpoints(expr: sympy.Expr) -> list[float]:
    pts = []
    args = [h.args[0] for h in expr.atoms(sympy.Heaviside)]
    args += [r.lhs - r.rhs for r in expr.atoms(sympy.core.relational.Relational)]
    for arg in args:
        for sol in sympy.solve(sympy.Eq(arg, 0), X):
            if sol.is_real:
                pts.append(float(sol))
    return pts


# ---------------------------------------------------------------------------
# internal nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sum(GFunc):
    terms: tuple[GFunc, ...]

    def children(self):
        return self.terms

    def _eval(self, eps, x):
        out = np.zeros(x.shape)
        for t in self.terms:
            out = out + t._eval(eps, x)
        return out

    def _eval_mp(self, eps, x, dps):
        return mpmath.fsum(t._eval_mp(eps, x, dps) for t in self.terms)

    def derivative(self):
        return add(*(t.derivative() for t in self.terms))

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.terms)) + ")"


@dataclass(frozen=True)
class Product(GFunc):
    factors: tuple[GFunc, ...]

    def children(self):
        return self.factors

    def _eval(self, eps, x):
        out = np.ones(x.shape)
        for f in self.factors:
            out = out * f._eval(eps, x)
        return out

    def _eval_mp(self, eps, x, dps):
        return mpmath.fprod(f._eval_mp(eps, x, dps) for f in self.factors)

    def derivative(self):
        terms = []
        for i, f in enumerate(self.factors):
            rest = list(self.factors)
            rest[i] = f.derivative()
            terms.append(multiply(*rest))
        return add(*terms)

    def __repr__(self):
        return "*".join(map(repr, self.factors))


@dataclass(frozen=True)
class Scale(GFunc):
    factor: float
    child: GFunc

    def children(self):
        return (self.child,)

    def _eval(self, eps, x):
        return self.factor * self.child._eval(eps, x)

    def _eval_mp(self, eps, x, dps):
        return mpmath.mpf(self.factor) * self.child._eval_mp(eps, x, dps)

    def derivative(self):
        return scale(self.factor, self.child.derivative())

    def __repr__(self):
        return f"{self.factor:g}*{self.child!r}"


@dataclass(frozen=True)
class Power(GFunc):
    child: GFunc
    k: int

    def children(self):
        return (self.child,)

    def _eval(self, eps, x):
        return self.child._eval(eps, x) ** self.k

    def _eval_mp(self, eps, x, dps):
        return self.child._eval_mp(eps, x, dps) ** self.k

    def derivative(self):
        return scale(float(self.k), multiply(power(self.child, self.k - 1), self.child.derivative()))

    def __repr__(self):
        return f"({self.child!r})^{self.k}"


@dataclass(frozen=True)
class ComposeSmooth(GFunc):
    """``outer(inner)`` for a smooth ``outer``; chain rule on differentiation."""

    outer: Smooth
    inner: GFunc

    def children(self):
        return (self.inner,)

    def _eval(self, eps, x):
        return self.outer._eval(eps, self.inner._eval(eps, x))

    def _eval_mp(self, eps, x, dps):
        return self.outer._eval_mp(eps, self.inner._eval_mp(eps, x, dps), dps)

    def derivative(self):
        return multiply(ComposeSmooth(self.outer.derivative(), self.inner), self.inner.derivative())

    def __repr__(self):
        return f"{self.outer!r}o({self.inner!r})"


@dataclass(frozen=True)
class RadialPower(GFunc):
    """``r**p * child``.  For p < 0 the child must vanish near r = 0; the value at 0 is 0."""

    p: int
    child: GFunc

    def children(self):
        return (self.child,)

    def _eval(self, eps, x):
        c = self.child._eval(eps, x)
        if self.p > 0:
            return x**self.p * c
        out = np.zeros(np.broadcast(x, c).shape)
        nz = x != 0.0
        cb = np.broadcast_to(c, out.shape)
        xb = np.broadcast_to(x, out.shape)
        out[nz] = cb[nz] / xb[nz] ** (-self.p)
        return out

    def _eval_mp(self, eps, x, dps):
        c = self.child._eval_mp(eps, x, dps)
        if x == 0 and self.p < 0:
            return mpmath.mpf(0)
        return x**self.p * c

    def derivative(self):
        return add(
            scale(float(self.p), radial_power(self.p - 1, self.child)),
            radial_power(self.p, self.child.derivative()),
        )

    def __repr__(self):
        return f"r^{self.p}*{self.child!r}"


def PowerCutoff(m: Mollifier, n: int, a: float, order: int = 0, sigma: float = DEFAULT_SIGMA) -> GFunc:
    """``r**-n * Ups^(order)(r)``, identically zero near the origin at admissible eps."""
    return radial_power(-n, Ups(m, a, order, sigma))


# ---------------------------------------------------------------------------
# smart constructors
# ---------------------------------------------------------------------------


def _check_mollifiers(nodes: Iterable[GFunc]) -> None:
    seen: set[Mollifier] = set()
    for n in nodes:
        seen |= n.mollifiers()
    if len(seen) > 1:
        raise MixedMollifier(
            "operands are embedded with different mollifiers; the algebra is defined per embedding"
        )


def add(*terms) -> GFunc:
    items = [as_gfunc(t) for t in terms]
    _check_mollifiers(items)
    flat: list[GFunc] = []
    const = 0.0
    for t in items:
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if _is_const(p):
                const += p.constant_value
            else:
                flat.append(p)
    if const != 0.0:
        flat.append(Smooth.constant(const))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def scale(c: float, g) -> GFunc:
    g = as_gfunc(g)
    c = float(c)
    if c == 0.0 or _is_const(g, 0.0):
        return ZERO
    if c == 1.0:
        return g
    if _is_const(g):
        return Smooth.constant(c * g.constant_value)
    if isinstance(g, Scale):
        return scale(c * g.factor, g.child)
    return Scale(c, g)


def multiply(*factors) -> GFunc:
    """Pointwise product of representatives; all operands must share one mollifier."""
    items = [as_gfunc(f) for f in factors]
    _check_mollifiers(items)
    coeff = 1.0
    flat: list[GFunc] = []
    for f in items:
        if isinstance(f, Scale):
            coeff *= f.factor
            f = f.child
        parts = f.factors if isinstance(f, Product) else (f,)
        for p in parts:
            if _is_const(p):
                coeff *= p.constant_value
            else:
                flat.append(p)
    if coeff == 0.0:
        return ZERO
    if not flat:
        return Smooth.constant(coeff)
    core = flat[0] if len(flat) == 1 else Product(tuple(flat))
    return scale(coeff, core)


def power(g, k: int) -> GFunc:
    g = as_gfunc(g)
    if int(k) != k or k < 0:
        raise ValueError("only non-negative integer powers are supported")
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return g
    if _is_const(g):
        return Smooth.constant(g.constant_value**k)
    return Power(g, k)


def radial_power(p: int, g) -> GFunc:
    g = as_gfunc(g)
    if p == 0:
        return g
    if _is_const(g, 0.0):
        return ZERO
    if isinstance(g, RadialPower):
        return radial_power(p + g.p, g.child)
    if isinstance(g, Scale):
        return scale(g.factor, radial_power(p, g.child))
    if isinstance(g, Sum):
        return add(*(radial_power(p, t) for t in g.terms))
    return RadialPower(int(p), g)


def compose(outer, inner) -> GFunc:
    outer = as_gfunc(outer)
    if not isinstance(outer, Smooth):
        raise TypeError("the outer function of a composition must be Smooth")
    return ComposeSmooth(outer, as_gfunc(inner))


# ---------------------------------------------------------------------------
# canonical expansion
# ---------------------------------------------------------------------------

Monomial = tuple[int, tuple[tuple[GFunc, int], ...]]


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    counts = Counter(dict(m1[1]))
    counts.update(dict(m2[1]))
    return (m1[0] + m2[0], tuple(sorted(counts.items(), key=lambda kv: repr(kv[0]))))


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = _mono_mul(ma, mb)
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def expand(g: GFunc) -> dict[Monomial, float]:
    """Canonical polynomial form: {(radial power, ((leaf, multiplicity), ...)): coefficient}.

    Sums, scalings, products, integer powers and radial powers are multiplied
    out; every other node is an opaque factor.  Two trees with equal expansions
    are the same element (the same representative for every eps).
    """
    if isinstance(g, Smooth) and g.is_constant:
        v = g.constant_value
        return {} if v == 0.0 else {(0, ()): v}
    if isinstance(g, Sum):
        out: dict = {}
        for t in g.terms:
            for k, v in expand(t).items():
                out[k] = out.get(k, 0.0) + v
        return {k: v for k, v in out.items() if v != 0.0}
    if isinstance(g, Scale):
        return {k: g.factor * v for k, v in expand(g.child).items()}
    if isinstance(g, Product):
        acc = {(0, ()): 1.0}
        for f in g.factors:
            acc = _poly_mul(acc, expand(f))
        return {k: v for k, v in acc.items() if v != 0.0}
    if isinstance(g, Power):
        base = expand(g.child)
        acc = {(0, ()): 1.0}
        for _ in range(g.k):
            acc = _poly_mul(acc, base)
        return {k: v for k, v in acc.items() if v != 0.0}
    if isinstance(g, RadialPower):
        return {(k[0] + g.p, k[1]): v for k, v in expand(g.child).items()}
    return {(0, ((g, 1),)): 1.0}


def from_expansion(terms: dict[Monomial, float]) -> GFunc:
    parts = []
    for (p, factors), c in sorted(terms.items(), key=lambda kv: repr(kv[0])):
        leaves = [power(f, n) for f, n in factors]
        core = multiply(*leaves) if leaves else ONE
        parts.append(scale(c, radial_power(p, core)))
    return add(*parts) if parts else ZERO


def equivalent(g: GFunc, h: GFunc, rtol: float = 1e-12) -> bool:
    """True when both trees expand to the same canonical polynomial."""
    eg, eh = expand(g), expand(h)
    keys = set(eg) | set(eh)
    for k in keys:
        a, b = eg.get(k, 0.0), eh.get(k, 0.0)
        if abs(a - b) > rtol * max(abs(a), abs(b), 1e-300):
            return False
    return True


# ---------------------------------------------------------------------------
# distributional shadow
# ---------------------------------------------------------------------------


def _leaf_shadow(leaf: GFunc) -> tuple[sympy.Expr, bool, bool]:
    """(shadow, is_singular, is_radial_delta) for an opaque factor."""
    if isinstance(leaf, Smooth):
        if leaf.expr is None:
            raise UnsupportedNode("smooth leaf given only by callables has no symbolic shadow")
        return leaf.expr, False, False
    if isinstance(leaf, Ups):
        k = leaf.order
        if k == 0:
            return sympy.Heaviside(X), True, False
        # (Ups')^(n) is associated to (-1)^n n! delta(r) / r^n
        n = k - 1
        return (-1) ** n * sympy.factorial(n) * sympy.DiracDelta(X) / X**n, True, True
    if isinstance(leaf, Step):
        if leaf.order == 0:
            return sympy.Heaviside(X), True, False
        if leaf.order == 1:
            return sympy.DiracDelta(X), True, False
        return sympy.DiracDelta(X, leaf.order - 1), True, False
    if isinstance(leaf, ConvEmbed):
        if leaf.expr is None:
            raise UnsupportedNode("embedded callable has no symbolic shadow")
        return sympy.diff(leaf.expr, X, leaf.kernel_order), False, False
    if isinstance(leaf, ComposeSmooth):
        inner, sing, _ = _leaf_shadow(leaf.inner) if not isinstance(leaf.inner, Smooth) else (
            leaf.inner.expr, False, False)
        if sing or leaf.outer.expr is None or inner is None:
            raise UnsupportedNode("composition with a singular argument has no shadow")
        return leaf.outer.expr.subs(X, inner), False, False
    raise UnsupportedNode(f"no shadow rule for {type(leaf).__name__}")


def shadow_simplify(g: GFunc, measure: str = "radial3d") -> sympy.Expr:
    """Rewrite ``g`` as the distribution it is associated with.

    Rules: ``Ups -> H``, ``Ups' -> delta``, ``(Ups')^(n) -> (-1)^n n! delta/r^n``,
    embedded H and delta map to themselves.  With ``measure="radial3d"`` a
    radial ``delta(r) r^p`` term with p > -2 is dropped, since against
    ``4 pi r^2 T(r) dr`` it pairs to zero.  Products of two or more singular
    factors raise :class:`UnsupportedNode`.
    """
    if measure not in ("radial3d", "line"):
        raise ValueError("measure must be 'radial3d' or 'line'")
    total = sympy.Integer(0)
    for (p, factors), coeff in expand(g).items():
        n_singular = 0
        radial_delta = False
        term = sympy.nsimplify(coeff, rational=False) * X**p
        smooth_only_consts = True
        for leaf, mult in factors:
            shadow, singular, rdelta = _leaf_shadow(leaf)
            if singular:
                n_singular += mult
                radial_delta = radial_delta or rdelta
            elif shadow.has(X):
                smooth_only_consts = False
            term = term * shadow**mult
        if n_singular > 1:
            raise UnsupportedNode("products of singular factors have no guaranteed distributional shadow")
        if measure == "radial3d" and radial_delta and smooth_only_consts:
            pw = sympy.Poly(term.subs(sympy.DiracDelta(X), 1).as_numer_denom()[1], X).degree()
            num_deg = sympy.Poly(term.subs(sympy.DiracDelta(X), 1).as_numer_denom()[0], X).degree()
            if num_deg - pw > -2:
                continue
        total += term
    return sympy.simplify(total) if total != 0 else total


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported smooth bump used to pair representatives."""

    __test__ = False  # not a pytest class

    profile: BumpProfile
    name: str = ""

    @classmethod
    def bump(cls, centre: float = 0.0, half_width: float = 1.0, name: str = "",
             kind: str = "standard-bump") -> "TestFunction":
        return cls(BumpProfile(kind, half_width, centre), name or f"bump({centre:g},{half_width:g})")

    @property
    def support(self) -> tuple[float, float]:
        return self.profile.support

    def __call__(self, x, order: int = 0) -> np.ndarray:
        return self.profile(x, order)

    def value_at(self, x) -> float:
        return float(self.profile(np.asarray(x, dtype=float)))

    def derivative_at(self, x, order: int) -> float:
        if order > 2:
            raise ValueError("closed-form derivatives are provided up to order 2")
        return float(self.profile(np.asarray(x, dtype=float), order))

    def value_mp(self, x):
        return self.profile.value_mp(x)


def default_battery() -> tuple[TestFunction, ...]:
    """Three bumps with distinct centres and widths; the last has T(0) = 0."""
    return (
        TestFunction.bump(0.0, 1.0, "T0"),
        TestFunction.bump(0.3, 0.8, "T1"),
        TestFunction.bump(0.7, 0.5, "T2"),
    )
