"""Exception types raised by the engine."""

from __future__ import annotations


class ColombeauError(Exception):
    """Base class for all engine errors."""


class NumericFailure(ColombeauError):
    """A numerical procedure could not reach its target."""


class SingularMomentMatrix(ColombeauError):
    """The vanishing-moment system is too ill-conditioned to solve."""

    def __init__(self, condition: float, threshold: float):
        self.condition = condition
        self.threshold = threshold
        super().__init__(
            f"moment matrix condition estimate {condition:.3e} exceeds {threshold:.1e}"
        )


class MaxSubdivisions(NumericFailure):
    """Adaptive quadrature ran out of cells before meeting its tolerance."""

    def __init__(self, cells: int, value: float, err: float, target: float):
        self.cells = cells
        self.value = value
        self.err = err
        self.target = target
        super().__init__(
            f"quadrature used {cells} cells; error estimate {err:.3e} > target {target:.3e}"
        )


class InadmissibleEpsilon(ColombeauError):
    """Epsilon is too large for a cut-off leaf: eps must satisfy eps <= a / (R * sigma)."""


class DerivativeOrderExhausted(ColombeauError):
    """A smooth leaf was differentiated beyond its declared derivatives."""


class MixedMollifier(ColombeauError):
    """Operands of an algebraic operation were embedded with different mollifiers."""


class UnsupportedNode(ColombeauError):
    """The tree has no distributional shadow the rewriter can produce."""


class PoorFit(NumericFailure):
    """A power-law fit in log space has a residual above the accepted bound."""

    def __init__(self, residual: float, bound: float):
        self.residual = residual
        self.bound = bound
        super().__init__(f"log-space residual {residual:.3f} exceeds {bound:.2f}")


class DivergenceDetected(NumericFailure):
    """A pairing sweep grows without bound as eps -> 0."""

    def __init__(self, fit, values):
        self.fit = fit
        self.values = values
        super().__init__(
            f"pairing diverges like eps^{fit.exponent:g} with leading constant {fit.constant:.6g}"
        )
