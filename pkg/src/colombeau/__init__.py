"""Numerical calculus for generalized functions built from vanishing-moment mollifiers."""

from __future__ import annotations

from .asymptotics import (
    AsymptoticFit,
    EpsGrid,
    PairingResult,
    associate,
    moderateness_order,
    negligibility_check,
    pair,
    pairing_sweep,
    sifting_order,
    verify_ups_formulas,
)
from .errors import (
    ColombeauError,
    DerivativeOrderExhausted,
    DivergenceDetected,
    InadmissibleEpsilon,
    MaxSubdivisions,
    MixedMollifier,
    NumericFailure,
    PoorFit,
    SingularMomentMatrix,
    UnsupportedNode,
)
from .gfunc import (
    ConvEmbed,
    DeltaEmb,
    GFunc,
    HeavisideEmb,
    PowerCutoff,
    Smooth,
    TestFunction,
    Ups,
    UpsPrime,
    default_battery,
    derivative,
    evaluate,
    multiply,
    shadow_simplify,
)
from .mollifier import BumpProfile, Mollifier, build_mollifier, constants, eval_scaled, moment
from .quadrature import QuadSpec, integrate, quad

__version__ = "0.1.0"
