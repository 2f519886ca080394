"""Stochastic two-period OLG simulator for transfer and debt-rollover welfare
analysis under uncertain interest-rate-growth differentials."""

__version__ = "0.1.0"

from .model import (
    COBB_DOUGLAS,
    LINEAR,
    EconomyParams,
    PeriodState,
    RateTargets,
    annual_to_generational,
    generational_to_annual,
    production,
    risky_return,
    wage,
)
from .shocks import ShockStream, draw_shock, draw_shocks

__all__ = [
    "COBB_DOUGLAS",
    "LINEAR",
    "EconomyParams",
    "PeriodState",
    "RateTargets",
    "ShockStream",
    "annual_to_generational",
    "draw_shock",
    "draw_shocks",
    "generational_to_annual",
    "production",
    "risky_return",
    "wage",
    "__version__",
]
