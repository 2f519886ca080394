"""Core economy: parameter types, CES technology, factor prices, rate units.

Production is CES in capital and (unit) labor with a multiplicative
productivity shock:

    Y = A * (b*K^rho + (1-b))^(1/rho),      rho = (eta-1)/eta

The two limits used throughout the experiments are handled as explicit
branches: linear (eta = inf, rho = 1) and Cobb-Douglas (eta = 1), where
Y = A*K^b.  The Cobb-Douglas branch is never reached by evaluating the CES
form at rho ~ 0, which blows up numerically in the (.)^(1/rho) step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "LINEAR",
    "COBB_DOUGLAS",
    "EconomyParams",
    "RateTargets",
    "PeriodState",
    "production",
    "wage",
    "risky_return",
    "capital_share",
    "annual_to_generational",
    "generational_to_annual",
]

LINEAR = "linear"
COBB_DOUGLAS = "cobb_douglas"


class DomainError(ValueError):
    """Inputs outside the technology's domain (e.g. K = 0 marginal product)."""


@dataclass(frozen=True)
class EconomyParams:
    """Structural parameters of one parameterised economy.

    ``endowment`` is the resolved level of the young generation's
    non-stochastic endowment X; calibration sets it to ``endowment_fraction``
    times the average no-transfer wage so that fixed transfers stay feasible
    for arbitrarily bad wage draws.
    """

    beta: float = 0.5            # discount weight on old-age utility
    gamma: float = 0.0           # relative risk aversion
    mu: float = 0.0              # mean of ln A
    sigma: float = 0.2           # std dev of ln A
    b: float = 1.0 / 3.0         # CES capital share parameter
    eta: float = math.inf        # elasticity of substitution (inf = linear)
    endowment_fraction: float = 1.0
    old_share: float = 1.0       # share of issuance proceeds paid to the old
    period_years: float = 25.0
    endowment: float = 0.0       # resolved level of X (goods)

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 < self.b < 1.0:
            raise ValueError(f"b must be in (0,1), got {self.b}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not 0.0 <= self.old_share <= 1.0:
            raise ValueError(f"old_share must be in [0,1], got {self.old_share}")
        if self.endowment_fraction < 0.0:
            raise ValueError("endowment_fraction must be >= 0")
        if self.endowment < 0.0:
            raise ValueError("endowment must be >= 0")
        if self.period_years <= 0.0:
            raise ValueError("period_years must be > 0")

    @property
    def rho(self) -> float:
        """Curvature (eta-1)/eta; 1 for linear, 0 tags the Cobb-Douglas branch."""
        if math.isinf(self.eta):
            return 1.0
        return (self.eta - 1.0) / self.eta

    @property
    def branch(self) -> str:
        if math.isinf(self.eta):
            return LINEAR
        if self.eta == 1.0:
            return COBB_DOUGLAS
        return "ces"

    def with_endowment(self, level: float) -> "EconomyParams":
        return replace(self, endowment=level)


@dataclass(frozen=True)
class RateTargets:
    """Net annual differential targets in percent/year: safe and risky."""

    safe_annual: float
    risky_annual: float

    def __post_init__(self):
        if self.safe_annual > self.risky_annual:
            raise ValueError(
                f"safe target ({self.safe_annual}) above risky target "
                f"({self.risky_annual}): negative risk spread not allowed"
            )

    def gross_generational(self, period_years: float = 25.0) -> tuple[float, float]:
        return (
            annual_to_generational(self.safe_annual, period_years),
            annual_to_generational(self.risky_annual, period_years),
        )


@dataclass(frozen=True)
class PeriodState:
    """Realised quantities of one generation-period."""

    shock: float
    capital: float           # K_{t-1} carried into the period
    output: float
    wage: float
    risky_return: float      # gross generational return paid this period
    safe_return: float       # gross shadow safe rate priced this period
    young_consumption: float
    old_consumption: float
    debt: float              # debt outstanding at end of period
    capital_next: float = 0.0  # K_t chosen by the young this period

    def __post_init__(self):
        if self.young_consumption <= 0.0 or self.old_consumption <= 0.0:
            raise ValueError("consumptions must be strictly positive")
        if self.debt < 0.0:
            raise ValueError("debt must be non-negative")


def _as_array(x):
    return np.asarray(x, dtype=float)


def production(capital, shock, params: EconomyParams):
    """Output Y for capital K and shock A; labor normalised to 1."""
    K = _as_array(capital)
    A = _as_array(shock)
    if np.any(K < 0.0):
        raise DomainError("capital must be non-negative")
    if np.any(A <= 0.0):
        raise DomainError("shock must be positive")
    b = params.b
    branch = params.branch
    if branch == LINEAR:
        out = A * (b * K + (1.0 - b))
    elif branch == COBB_DOUGLAS:
        out = A * K**b
    else:
        rho = params.rho
        out = A * (b * K**rho + (1.0 - b)) ** (1.0 / rho)
    return out if out.ndim else float(out)


def wage(capital, shock, params: EconomyParams):
    """Marginal product of labor: W = A(1-b)(Y/A)^(1-rho)."""
    K = _as_array(capital)
    A = _as_array(shock)
    b = params.b
    branch = params.branch
    if branch == LINEAR:
        out = A * (1.0 - b) * np.ones_like(K)
    elif branch == COBB_DOUGLAS:
        out = (1.0 - b) * _as_array(production(K, A, params))
    else:
        y_over_a = _as_array(production(K, A, params)) / A
        out = A * (1.0 - b) * y_over_a ** (1.0 - params.rho)
    return out if out.ndim else float(out)


def risky_return(capital, shock, params: EconomyParams):
    """Marginal product of capital: R = A*b*(Y/(A*K))^(1-rho)."""
    K = _as_array(capital)
    A = _as_array(shock)
    b = params.b
    branch = params.branch
    if branch == LINEAR:
        out = A * b * np.ones_like(K)
    else:
        if np.any(K <= 0.0):
            raise DomainError("marginal product of capital unbounded at K = 0")
        if branch == COBB_DOUGLAS:
            out = b * _as_array(production(K, A, params)) / K
        else:
            y = _as_array(production(K, A, params))
            out = A * b * (y / (A * K)) ** (1.0 - params.rho)
    return out if out.ndim else float(out)


def capital_share(capital, shock, params: EconomyParams):
    """Local capital income share R*K/Y (equals b under Cobb-Douglas)."""
    if params.branch == COBB_DOUGLAS:
        K = _as_array(capital)
        out = np.full_like(K, params.b)
        return out if out.ndim else float(out)
    y = _as_array(production(capital, shock, params))
    r = _as_array(risky_return(capital, shock, params))
    out = r * _as_array(capital) / y
    return out if out.ndim else float(out)


def annual_to_generational(rate_annual_percent, period_years: float = 25.0):
    """Gross generational rate from a net annual percent rate."""
    r = _as_array(rate_annual_percent)
    if np.any(r <= -100.0):
        raise ValueError("annual rate must exceed -100 percent")
    out = (1.0 + r / 100.0) ** period_years
    return out if out.ndim else float(out)


def generational_to_annual(gross_generational, period_years: float = 25.0):
    """Inverse of :func:`annual_to_generational`; returns percent/year."""
    g = _as_array(gross_generational)
    if np.any(g <= 0.0):
        raise ValueError("gross rate must be positive")
    out = 100.0 * (g ** (1.0 / period_years) - 1.0)
    return out if out.ndim else float(out)
