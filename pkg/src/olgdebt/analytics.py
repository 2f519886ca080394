"""Closed-form welfare calculus for a marginal intergenerational transfer.

A small transfer dD moves utility through two channels.  The direct channel
compares the transfer's implicit return (the zero growth rate) with the safe
rate: dU_a = beta (1 - Rf) U'(C2) dD.  The indirect channel works through
factor prices: lower capital raises the return and lowers the wage along the
factor price frontier dW = -K dR, giving

    dU_b = beta (1/eta) (1 - s_K) (R - 1) U'(C2) R dK

with s_K the capital income share (the wage-side elasticity K F_KK / F_K
equals -(1/eta)(1 - s_K)).  Under linear production (eta = inf) the price
channel vanishes; under Cobb-Douglas the sign of the total effect collapses
to sign(1 - Rf * ER).

These formulas are marginal approximations evaluated at average rates; the
simulation modules treat them as an independent sign oracle, not as exact
values.  All rates here are growth-adjusted gross generational rates (growth
is normalised to zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "TransferEffect",
    "direct_effect_sign",
    "price_effect",
    "dK_dD_approx",
    "total_sign",
    "decompose_transfer_gradient",
]


def _sign(x: float) -> int:
    if x > 0.0:
        return 1
    if x < 0.0:
        return -1
    return 0


@dataclass(frozen=True)
class TransferEffect:
    """Marginal utility impact of a transfer, split by channel."""

    direct_effect: float
    price_effect: float

    @property
    def total_sign(self) -> int:
        return _sign(self.direct_effect + self.price_effect)


def direct_effect_sign(safe_rate_gross: float) -> int:
    """Sign of the direct channel: positive iff the safe rate is below one."""
    if safe_rate_gross <= 0.0:
        raise ValueError("safe rate must be a positive gross rate")
    return _sign(1.0 - safe_rate_gross)


def price_effect(risky_rate_gross: float, eta: float, capital_share: float,
                 dK: float) -> float:
    """Price-channel kernel (1/eta)(1 - s_K)(R - 1) R dK.

    The positive common factor beta U'(C2) is omitted (it scales both
    channels and cannot change signs); use `decompose_transfer_gradient`
    for utility-unit magnitudes.  Zero when eta = inf: linear production
    leaves factor prices unaffected by the capital stock.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if math.isinf(eta):
        return 0.0
    labor_share = 1.0 - capital_share
    return (1.0 / eta) * labor_share * (risky_rate_gross - 1.0) * risky_rate_gross * dK


def dK_dD_approx(beta: float, capital_share: float, eta: float,
                 risky_rate_gross: float) -> float:
    """Crowding-out slope approximation -1 / (1 - beta * alpha * (1/eta) * ER)."""
    if math.isinf(eta):
        return -1.0
    denom = 1.0 - beta * capital_share * (1.0 / eta) * risky_rate_gross
    if denom == 0.0:
        raise ZeroDivisionError("crowding-out denominator vanishes")
    return -1.0 / denom


def total_sign(safe_rate_gross: float, risky_rate_gross: float, beta: float,
               capital_share: float, eta: float) -> int:
    """Sign of the total marginal welfare effect of a small transfer.

    Linear branch: sign(1 - Rf).  Cobb-Douglas branch: sign(1 - Rf * ER).
    General CES: the two channels combined with the approximate crowding-out
    slope.
    """
    if safe_rate_gross <= 0.0 or risky_rate_gross <= 0.0:
        raise ValueError("rates must be positive gross rates")
    if math.isinf(eta):
        return _sign(1.0 - safe_rate_gross)
    if eta == 1.0:
        return _sign(1.0 - safe_rate_gross * risky_rate_gross)
    minus_dkdd = -dK_dD_approx(beta, capital_share, eta, risky_rate_gross)
    bracket = (1.0 - safe_rate_gross) \
        - (1.0 / eta) * capital_share * safe_rate_gross * minus_dkdd \
        * (risky_rate_gross - 1.0)
    return _sign(bracket)


def decompose_transfer_gradient(safe_rate_gross: float, risky_rate_gross: float,
                                beta: float, eta: float, capital_share: float,
                                marginal_utility_old: float,
                                dK_dD: float) -> TransferEffect:
    """Utility-unit decomposition of dU/dD at a steady state.

    ``marginal_utility_old`` is U'(C2) = 1/C2 for the log aggregator;
    ``dK_dD`` should be the realised (e.g. finite-difference) slope of the
    equilibrium capital stock in the transfer.
    """
    direct = beta * (1.0 - safe_rate_gross) * marginal_utility_old
    price = beta * marginal_utility_old * price_effect(
        risky_rate_gross, eta, capital_share, dK_dD)
    return TransferEffect(direct_effect=direct, price_effect=price)
