"""Worked applications: a regularized point charge and travelling shocks."""

from __future__ import annotations

from .coulomb import (
    CoulombConfig,
    SelfEnergy,
    charge_density,
    coulomb_field,
    coulomb_potential,
    five_term_density,
    gauss_check,
    self_energy,
    total_charge,
)
from .shock import (
    Profile,
    ShockConfig,
    alpha_product,
    burgers_jump_speed,
    multiplied_equation_residual,
)

__all__ = [
    "CoulombConfig", "SelfEnergy", "charge_density", "coulomb_field", "coulomb_potential",
    "five_term_density", "gauss_check", "self_energy", "total_charge",
    "Profile", "ShockConfig", "alpha_product", "burgers_jump_speed", "multiplied_equation_residual",
]
