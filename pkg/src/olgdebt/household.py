"""Young-generation saving problem under Epstein-Zin-Weil preferences.

Objective (unit intertemporal elasticity, risk aversion gamma):

    U = (1 - beta) ln C1 + beta/(1 - gamma) * ln E[C2^(1-gamma)]

with C1 = cash - K - B and C2 = R'(K, A') K + Rf B + T, where B is safe debt
bought by the young, T a pay-as-you-go transfer received in old age, and
R'(K, A') the general-equilibrium return (cohort symmetry makes the
individual and aggregate K coincide).  First-order condition:

    (1 - beta)/C1 = beta * E[R' C2^-gamma] / E[C2^(1-gamma)]

and the shadow safe rate clears the debt market:

    Rf = E[R' C2^-gamma] / E[C2^-gamma]

Expectations over A' are Gauss-Hermite quadrature on ln A by default (a
seeded Monte Carlo rule is available for validation).  All moment work is
done in log space so that gamma of order 50 stays well-conditioned.

Everything here is a pure function of its inputs; the vectorised entry
points run fixed-iteration, lane-decoupled solves so results are bitwise
independent of batching and worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .model import COBB_DOUGLAS, LINEAR, EconomyParams, PeriodState, risky_return, wage
from .shocks import ShockStream

__all__ = [
    "ExpectationRule",
    "SavingProblem",
    "EquilibriumSolution",
    "NoSolutionError",
    "InfeasibleTransferError",
    "InsolvencyError",
    "solve_saving",
    "shadow_safe_rate",
    "step_no_debt",
    "step_with_debt",
    "ezw_utility",
    "consumption_equivalent_pct",
    "realized_welfare",
]

_BISECT_ITERS = 80
_RF_ITERS = 60
_RF_DAMP = 0.5
_EPS = 1e-12
_GAMMA_LOG_LIMIT = 1e-8


class NoSolutionError(RuntimeError):
    """No interior saving choice keeps both consumptions positive."""


class InfeasibleTransferError(ValueError):
    """Transfer exceeds the young generation's resources."""


class InsolvencyError(RuntimeError):
    """The young cannot absorb the debt issue with positive consumption."""


@dataclass(frozen=True)
class ExpectationRule:
    """How E over next-period shocks is evaluated.

    81 Gauss-Hermite nodes keep the moment ratios at machine precision for
    risk aversion up to ~55 (high-spread calibration cells need gamma near
    50, where 21 nodes carry O(1) relative error).
    """

    kind: str = "quadrature"    # "quadrature" | "monte_carlo"
    nodes: int = 81
    draws: int = 4096
    master_seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.kind not in ("quadrature", "monte_carlo"):
            raise ValueError(f"unknown expectation rule kind: {self.kind}")
        if self.kind == "quadrature" and self.nodes < 2:
            raise ValueError("quadrature needs at least 2 nodes")
        if self.kind == "monte_carlo" and self.draws < 2:
            raise ValueError("monte carlo needs at least 2 draws")


DEFAULT_RULE = ExpectationRule()


@dataclass(frozen=True)
class SavingProblem:
    """One cohort's saving problem (all quantities in goods)."""

    cash_on_hand: float
    transfer_to_old_next: float = 0.0
    debt_holding: float = 0.0
    expectation_rule: ExpectationRule = field(default_factory=ExpectationRule)

    def __post_init__(self):
        if self.cash_on_hand <= 0.0:
            raise InfeasibleTransferError(
                f"cash on hand must be positive, got {self.cash_on_hand}"
            )
        if self.transfer_to_old_next < 0.0 or self.debt_holding < 0.0:
            raise ValueError("old-age claims must be non-negative")


@dataclass(frozen=True)
class EquilibriumSolution:
    capital_chosen: float
    safe_rate: float
    foc_residual: float
    portfolio_residual: float


@lru_cache(maxsize=32)
def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermgauss(n)
    return x, np.log(w) - 0.5 * math.log(math.pi)


def shock_nodes(params: EconomyParams, rule: ExpectationRule = DEFAULT_RULE,
                mu=None, sigma=None):
    """Nodes a_i and log-weights for E over A'; weights sum to one.

    ``mu`` may be an array (one lane per calibration cell); the returned node
    array then has shape (lanes, n).
    """
    mu = params.mu if mu is None else mu
    sigma = params.sigma if sigma is None else sigma
    if rule.kind == "quadrature":
        x, lw = _hermite(rule.nodes)
        a = np.exp(np.asarray(mu)[..., None] + sigma * math.sqrt(2.0) * x)
        return a, lw
    stream = ShockStream(rule.master_seed, rule.stream_id)
    z = stream.normals(rule.draws)
    a = np.exp(np.asarray(mu)[..., None] + sigma * z)
    lw = np.full(rule.draws, -math.log(rule.draws))
    return a, lw


def _return_nodes(k, a, b: float, branch: str, rho: float):
    """R'(K, A') on the node grid; k broadcast against a's last axis."""
    k = np.asarray(k, dtype=float)[..., None]
    if branch == LINEAR:
        return a * b * np.ones_like(k)
    if branch == COBB_DOUGLAS:
        return b * a * k ** (b - 1.0)
    y_over_ak = (b + (1.0 - b) * k ** (-rho)) ** (1.0 / rho)
    return a * b * y_over_ak ** (1.0 - rho)


def _lse(logv, axis=-1):
    m = np.max(logv, axis=axis, keepdims=True)
    out = m[..., 0] + np.log(np.sum(np.exp(logv - m), axis=axis))
    return out


def _moments(k, income, a, lw, gamma, b, branch, rho):
    """log E[C2^(1-g)], log E[R' C2^-g], log E[C2^-g] for C2 = R'K + income."""
    r = _return_nodes(k, a, b, branch, rho)
    c2 = r * np.asarray(k, dtype=float)[..., None] + np.asarray(income, dtype=float)[..., None]
    if np.any(c2 <= 0.0):
        raise NoSolutionError("second-period consumption non-positive at a node")
    ln_c2 = np.log(c2)
    g = np.asarray(gamma, dtype=float)[..., None]
    ln_e_c2_1mg = _lse((1.0 - g) * ln_c2 + lw)
    ln_e_rc2_mg = _lse(np.log(r) - g * ln_c2 + lw)
    ln_e_c2_mg = _lse(-g * ln_c2 + lw)
    return ln_e_c2_1mg, ln_e_rc2_mg, ln_e_c2_mg


def _foc_gap_vec(k, cash, income, debt, rf, a, lw, beta, gamma, b, branch, rho):
    """(1-beta)/C1 - beta E[R' C2^-g]/E[C2^(1-g)]; increasing in K."""
    c1 = cash - k - debt
    inc = income + rf * debt
    ln_e_c2_1mg, ln_e_rc2_mg, _ = _moments(k, inc, a, lw, gamma, b, branch, rho)
    rhs = beta * np.exp(ln_e_rc2_mg - ln_e_c2_1mg)
    return (1.0 - beta) / c1 - rhs


def _rf_fixed_point(k, income, debt, a, lw, gamma, b, branch, rho, rf0=None):
    """Safe rate solving Rf = E[R' C2^-g]/E[C2^-g] with C2 = R'K + Rf*debt + income."""
    k = np.asarray(k, dtype=float)
    if rf0 is None:
        rf = np.exp(_lse(np.log(_return_nodes(k, a, b, branch, rho)) + lw))
    else:
        rf = np.asarray(rf0, dtype=float).copy()
    debt = np.asarray(debt, dtype=float)
    iters = _RF_ITERS if np.any(debt > 0.0) else 1
    for i in range(iters):
        inc = income + rf * debt
        _, ln_e_rc2_mg, ln_e_c2_mg = _moments(k, inc, a, lw, gamma, b, branch, rho)
        target = np.exp(ln_e_rc2_mg - ln_e_c2_mg)
        damp = _RF_DAMP if iters > 1 else 0.0
        rf = damp * rf + (1.0 - damp) * target
    return rf


def solve_portfolio_vec(cash, income, debt, a, lw, beta, gamma, b, branch, rho):
    """Vectorised equilibrium (K, Rf) given forced debt holdings.

    Lane-decoupled fixed-iteration bisection on the saving first-order
    condition; the safe rate is the market-clearing fixed point given K.
    Lanes with no interior solution come back as NaN.
    """
    cash = np.asarray(cash, dtype=float)
    income = np.broadcast_to(np.asarray(income, dtype=float), cash.shape).copy()
    debt = np.broadcast_to(np.asarray(debt, dtype=float), cash.shape).copy()
    beta = np.broadcast_to(np.asarray(beta, dtype=float), cash.shape)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), cash.shape)

    if not np.any(income > 0.0):
        # without old-age claims the two first-order conditions collapse to
        # the exact total-saving rule K + B = beta * cash; only the safe
        # rate needs a fixed point
        k = beta * cash - debt
        k = np.where(k > _EPS, k, np.nan)
        k_eval = np.where(np.isfinite(k), k, 1.0)
        rf = _rf_fixed_point(k_eval, income, debt, a, lw, gamma, b, branch, rho)
        return k, np.where(np.isfinite(k), rf, np.nan)

    span = cash - debt
    bad = span <= _EPS
    lo = np.where(bad, np.nan, span * 1e-9)
    hi = np.where(bad, np.nan, span * (1.0 - 1e-9))
    any_debt = bool(np.any(debt > 0.0))

    rf = None
    zero = np.zeros_like(cash)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        k_eval = np.where(bad, 1.0, mid)
        if any_debt:
            rf = _rf_fixed_point(k_eval, income, debt, a, lw, gamma, b,
                                 branch, rho, rf0=rf)
        gap = _foc_gap_vec(k_eval, np.where(bad, 3.0, cash), income,
                           np.where(bad, 0.0, debt),
                           rf if any_debt else zero, a, lw, beta, gamma,
                           b, branch, rho)
        hi = np.where(gap > 0.0, mid, hi)
        lo = np.where(gap > 0.0, lo, mid)
    k = 0.5 * (lo + hi)
    k = np.where(bad, np.nan, k)
    rf = _rf_fixed_point(np.where(bad, 1.0, k), income, debt, a, lw, gamma,
                         b, branch, rho, rf0=rf)
    rf = np.where(bad, np.nan, rf)
    return k, rf


def _solution_residuals(k, rf, cash, income, debt, a, lw, beta, gamma, b, branch, rho):
    c1 = cash - k - debt
    inc = income + rf * debt
    ln_e_c2_1mg, ln_e_rc2_mg, ln_e_c2_mg = _moments(k, inc, a, lw, gamma, b, branch, rho)
    foc = 1.0 - beta * np.exp(ln_e_rc2_mg - ln_e_c2_1mg) * c1 / (1.0 - beta)
    port = 1.0 - rf * np.exp(ln_e_c2_mg - ln_e_rc2_mg)
    return foc, port


def solve_saving(problem: SavingProblem, params: EconomyParams) -> EquilibriumSolution:
    """Equilibrium saving (and safe rate) for one cohort's problem."""
    a, lw = shock_nodes(params, problem.expectation_rule)
    cash = np.array([problem.cash_on_hand])
    income = np.array([problem.transfer_to_old_next])
    debt = np.array([problem.debt_holding])
    if problem.debt_holding >= problem.cash_on_hand:
        raise InsolvencyError("debt holding exhausts cash on hand")
    a = np.broadcast_to(a, (1, a.shape[-1]))
    k, rf = solve_portfolio_vec(cash, income, debt, a, lw,
                                params.beta, params.gamma, params.b,
                                params.branch, params.rho)
    if not np.isfinite(k[0]):
        raise NoSolutionError("no interior saving solution in the feasible interval")
    foc, port = _solution_residuals(k, rf, cash, income, debt, a, lw,
                                    params.beta, params.gamma, params.b,
                                    params.branch, params.rho)
    return EquilibriumSolution(
        capital_chosen=float(k[0]),
        safe_rate=float(rf[0]),
        foc_residual=float(foc[0]),
        portfolio_residual=float(port[0]),
    )


def shadow_safe_rate(capital_chosen: float, second_period_claims: float,
                     params: EconomyParams,
                     rule: ExpectationRule = DEFAULT_RULE,
                     debt_holding: float = 0.0) -> float:
    """Gross safe rate Rf = E[R' C2^-g]/E[C2^-g].

    ``second_period_claims`` is non-portfolio old-age income (a transfer);
    debt held at the shadow rate itself enters through ``debt_holding``.
    """
    a, lw = shock_nodes(params, rule)
    a = np.broadcast_to(a, (1, a.shape[-1]))
    rf = _rf_fixed_point(np.array([capital_chosen]),
                         np.array([second_period_claims]),
                         np.array([debt_holding]), a, lw,
                         params.gamma, params.b, params.branch, params.rho)
    return float(rf[0])


def expected_return(capital: float, params: EconomyParams,
                    rule: ExpectationRule = DEFAULT_RULE) -> float:
    """Conditional mean of next period's gross risky return E_t[R']."""
    a, lw = shock_nodes(params, rule)
    r = _return_nodes(np.array([capital]), np.broadcast_to(a, (1, a.shape[-1])),
                      params.b, params.branch, params.rho)
    return float(np.exp(_lse(np.log(r) + lw))[0])


# ---------------------------------------------------------------------------
# Welfare
# ---------------------------------------------------------------------------

def ezw_utility(c1, ln_e_c2_1mg=None, gamma=None, beta=None, *,
                c2_nodes=None, log_weights=None):
    """EZW utility (1-b) ln C1 + b/(1-g) ln E[C2^(1-g)].

    Either pass the precomputed log-moment or raw (c2_nodes, log_weights).
    The gamma = 1 limit is the log aggregator beta * E[ln C2].
    """
    c1 = np.asarray(c1, dtype=float)
    if np.any(c1 <= 0.0):
        raise ValueError("first-period consumption must be positive")
    g = np.asarray(gamma, dtype=float)
    if c2_nodes is not None:
        c2 = np.asarray(c2_nodes, dtype=float)
        if np.any(c2 <= 0.0):
            raise ValueError("second-period consumption must be positive")
        ln_c2 = np.log(c2)
        s = (1.0 - g)[..., None] if g.ndim else 1.0 - g
        ln_e = _lse(s * ln_c2 + log_weights)
        mean_ln_c2 = np.sum(np.exp(log_weights) * ln_c2, axis=-1)
    else:
        ln_e = np.asarray(ln_e_c2_1mg, dtype=float)
        mean_ln_c2 = None
    with np.errstate(divide="ignore", invalid="ignore"):
        aggr = ln_e / (1.0 - g)
    near_log = np.abs(1.0 - g) < _GAMMA_LOG_LIMIT
    if np.any(near_log):
        if mean_ln_c2 is None:
            raise ValueError("gamma = 1 limit needs raw c2 nodes")
        aggr = np.where(near_log, mean_ln_c2, aggr)
    u = (1.0 - beta) * np.log(c1) + np.asarray(beta) * aggr
    return u if u.ndim else float(u)


def consumption_equivalent_pct(utility, baseline_utility):
    """Uniform percent change in baseline consumption matching the utility gap.

    Scaling both periods' consumption by (1 + x) adds ln(1 + x) to EZW
    utility, so the consumption equivalent of dU is 100 (exp(dU) - 1).
    """
    du = np.asarray(utility, dtype=float) - np.asarray(baseline_utility, dtype=float)
    out = 100.0 * np.expm1(du)
    return out if out.ndim else float(out)


def realized_welfare(c1, c2_nodes, log_weights, params: EconomyParams,
                     baseline_utility=None):
    """Utility of an allocation and, optionally, its consumption-equivalent
    percent change against a baseline utility."""
    u = ezw_utility(c1, gamma=params.gamma, beta=params.beta,
                    c2_nodes=c2_nodes, log_weights=log_weights)
    if baseline_utility is None:
        return u, None
    return u, consumption_equivalent_pct(u, baseline_utility)


def cohort_utility(k, cash, income, debt, rf, a, lw, beta, gamma, b, branch, rho):
    """Ex-ante utility of a cohort at its saving solution (vectorised)."""
    c1 = cash - k - debt
    r = _return_nodes(k, a, b, branch, rho)
    c2 = r * np.asarray(k, dtype=float)[..., None] \
        + np.asarray(income + rf * debt, dtype=float)[..., None]
    ln_c2 = np.log(c2)
    g = np.asarray(gamma, dtype=float)
    s = (1.0 - g)[..., None] if g.ndim else 1.0 - g
    ln_e = _lse(s * ln_c2 + lw)
    with np.errstate(divide="ignore", invalid="ignore"):
        aggr = ln_e / (1.0 - g)
    near_log = np.abs(1.0 - g) < _GAMMA_LOG_LIMIT
    if np.any(near_log):
        mean_ln = np.sum(np.exp(lw) * ln_c2, axis=-1)
        aggr = np.where(near_log, mean_ln, aggr)
    return (1.0 - beta) * np.log(c1) + beta * aggr


# ---------------------------------------------------------------------------
# Equations of motion
# ---------------------------------------------------------------------------

def step_no_debt(prev_capital: float, shock: float, transfer: float,
                 params: EconomyParams,
                 rule: ExpectationRule = DEFAULT_RULE) -> PeriodState:
    """One period of the transfer economy (no public debt).

    The young receive W + X, pay the transfer D to the contemporaneous old,
    and will receive D themselves in old age.
    """
    if prev_capital <= 0.0:
        raise ValueError("prev_capital must be positive")
    w = wage(prev_capital, shock, params)
    r = risky_return(prev_capital, shock, params)
    cash = w + params.endowment - transfer
    if cash <= 0.0:
        raise InfeasibleTransferError(
            f"transfer {transfer} exceeds young resources {w + params.endowment}"
        )
    problem = SavingProblem(cash_on_hand=cash, transfer_to_old_next=transfer,
                            expectation_rule=rule)
    sol = solve_saving(problem, params)
    c1 = cash - sol.capital_chosen
    c2_old = r * prev_capital + transfer
    from .model import production as _production
    return PeriodState(
        shock=shock, capital=prev_capital,
        output=_production(prev_capital, shock, params),
        wage=w, risky_return=r, safe_return=sol.safe_rate,
        young_consumption=c1, old_consumption=c2_old,
        debt=0.0, capital_next=sol.capital_chosen,
    )


def step_with_debt(prev_capital: float, debt_due: float, shock: float,
                   params: EconomyParams,
                   rule: ExpectationRule = DEFAULT_RULE,
                   young_windfall: float = 0.0) -> PeriodState:
    """One period of the rollover economy.

    ``debt_due`` is the obligation maturing this period (last period's issue
    grown at the safe rate priced then).  The old are paid in full; the young
    absorb the refinancing issue of equal face value at the endogenous safe
    rate, solved jointly with their capital choice.  ``young_windfall`` covers
    the issuance period's share of proceeds handed to the young, net of any
    failure tax.
    """
    if prev_capital <= 0.0:
        raise ValueError("prev_capital must be positive")
    if debt_due < 0.0:
        raise ValueError("debt_due must be non-negative")
    w = wage(prev_capital, shock, params)
    r = risky_return(prev_capital, shock, params)
    cash = w + params.endowment + young_windfall
    if cash - debt_due <= 0.0:
        raise InsolvencyError(
            f"young cannot absorb debt {debt_due} from resources {cash}"
        )
    problem = SavingProblem(cash_on_hand=cash, debt_holding=debt_due,
                            expectation_rule=rule)
    sol = solve_saving(problem, params)
    c1 = cash - sol.capital_chosen - debt_due
    c2_old = r * prev_capital + debt_due
    from .model import production as _production
    return PeriodState(
        shock=shock, capital=prev_capital,
        output=_production(prev_capital, shock, params),
        wage=w, risky_return=r, safe_return=sol.safe_rate,
        young_consumption=c1, old_consumption=c2_old,
        debt=debt_due, capital_next=sol.capital_chosen,
    )
