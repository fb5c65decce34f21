"""Record types for allocations, prices, and shadow values."""
from __future__ import annotations

from dataclasses import dataclass, field, fields


@dataclass
class PeriodAllocation:
    """One period's quantities, per household unless capitalized."""

    c: float = 0.0          # consumption
    h: float = 0.0          # housing services
    ene: float = 0.0        # household energy composite
    e: float = 0.0          # household electricity
    res: float = 0.0        # household fossil resource
    i_Y: float = 0.0
    i_F: float = 0.0
    i_N: float = 0.0
    i_H: float = 0.0
    i_E: float = 0.0
    k_Y: float = 0.0        # beginning-of-period stocks
    k_F: float = 0.0
    k_N: float = 0.0
    k_H: float = 0.0
    k_E: float = 0.0
    land: float = 0.0
    Y: float = 0.0          # per-household output
    Z: float = 0.0
    L: float = 0.0          # per-household labor
    E: float = 0.0          # per-household final electricity
    E_Y: float = 0.0
    E_F: float = 0.0
    E_N: float = 0.0
    K_Y: float = 0.0        # aggregates (n * per-household)
    K_F: float = 0.0
    K_N: float = 0.0
    Res_F: float = 0.0      # aggregate resource use in fossil generation

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class PriceSystem:
    """Prices in final-good units."""

    p_E: float = 0.0
    p_F: float = 0.0
    p_N: float = 0.0
    p_ene: float = 0.0
    R: float = 0.0
    R_F: float = 0.0
    R_N: float = 0.0
    w: float = 0.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class MultiplierSet:
    """Shadow values of the household and planner problems."""

    lam: float = 0.0        # shadow value of income (u_c)
    chi: float = 0.0        # marginal utility of housing services
    nu_e: float = 0.0       # shadow value of purchased energy composite
    nu_ene: float = 0.0     # shadow value of the energy requirement
    psi: float = 0.0        # shadow values of the five capital stocks
    psi_F: float = 0.0
    psi_N: float = 0.0
    psi_H: float = 0.0
    psi_E: float = 0.0
    phi_H: float = 0.0      # irreversibility multipliers
    phi_E: float = 0.0
    mu_R: float = 0.0       # carbon-budget shadow value
    mu: float = 0.0         # multiplier on remaining-budget non-negativity
    chi_Y: float = 0.0      # planner shadow values of energy aggregates
    chi_F: float = 0.0
    chi_N: float = 0.0
    chi_E: float = 0.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class SteadyState:
    """Stationary no-policy equilibrium with diagnostics."""

    allocation: PeriodAllocation
    prices: PriceSystem
    multipliers: MultiplierSet
    land_price: float
    residual_norm: float
    jacobian_min_singular_value: float
    disposable_income: float = 0.0
    housing_energy_expenditure: float = 0.0
    diagnostics: dict = field(default_factory=dict)
