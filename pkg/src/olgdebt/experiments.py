"""Simulation campaigns: steady states, transfer-welfare grids, debt
rollovers, and scenario variations.

Campaign conventions:

* Steady-state initialisation simulates the no-transfer economy and uses
  time-averaged capital/saving as the starting point for policy runs.
* Transfer grids compare the steady state with and without a fixed transfer
  (a fraction of pre-transfer average saving) on common random numbers,
  cell by calibrated cell, reporting consumption-equivalent changes in the
  per-generation average EZW utility.
* Rollovers issue debt worth ``initial_debt_fraction`` of average saving at
  generation 0, hand ``old_share`` of the proceeds to the contemporaneous
  old, and roll the issue at the endogenous safe rate with no taxes.  A
  rollover fails when the maturing obligation exceeds ``failure_threshold``
  times the initial issue; the breaching cohort still absorbs the issue and
  the next young generation is taxed to bring debt back to
  ``post_failure_level`` times the initial issue (a config switch pays it
  off entirely instead).  Per generation the engine records both the debt
  the young end up holding and the obligation that had to be refinanced.
* Welfare along rollover paths is measured against a same-stream no-debt
  counterfactual, so a zero issue gives identically zero changes.

All engines are lane-vectorised with fixed iteration counts; lanes are
independent, so chunking across worker processes cannot change any value.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import calibration as cal
from .household import (
    ExpectationRule,
    _lse,
    _moments,
    cohort_utility,
    shock_nodes,
    solve_portfolio_vec,
)
from .model import (
    COBB_DOUGLAS,
    LINEAR,
    EconomyParams,
    RateTargets,
    generational_to_annual,
    risky_return,
    wage,
)
from .shocks import ShockStream

__all__ = [
    "TransferGridSpec",
    "RolloverSpec",
    "TransferGridResult",
    "RolloverResult",
    "SteadyState",
    "initialize_steady_state",
    "run_transfer_grid",
    "run_rollover",
    "run_scenarios",
    "SCENARIO_VARIATIONS",
]

DEFAULT_SEED = 20240613

# Stream layout: low ids are reserved by calibration; campaigns use fixed
# blocks so no random numbers are ever shared across purposes.
STREAM_STEADY_STATE = 3
STREAM_GRID = 10
STREAM_ROLLOVER_BASE = 100_000


@dataclass(frozen=True)
class SteadyState:
    mean_capital: float
    mean_saving: float
    mean_wage: float
    achieved_risky_annual: float
    achieved_safe_annual: float
    mean_log_spread: float


def initialize_steady_state(params: EconomyParams, realizations: int = 30_000,
                            master_seed: int = DEFAULT_SEED,
                            stream_id: int = STREAM_STEADY_STATE,
                            burn_in: int = 100, k0: float = 1.0) -> SteadyState:
    """Average capital and saving of the calibrated no-transfer economy."""
    stats = cal.no_transfer_stats(params, draws=realizations, burn_in=burn_in,
                                  master_seed=master_seed, stream_id=stream_id,
                                  k0=k0)
    return SteadyState(
        mean_capital=stats["mean_capital"],
        mean_saving=stats["mean_saving"],
        mean_wage=stats["mean_wage"],
        achieved_risky_annual=stats["achieved_risky_annual"],
        achieved_safe_annual=stats["achieved_safe_annual"],
        mean_log_spread=stats["mean_log_spread"],
    )


# ---------------------------------------------------------------------------
# Transfer-welfare grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferGridSpec:
    safe_range: tuple[float, float]
    risky_range: tuple[float, float]
    transfer_fraction: float = 0.05
    branch: str | None = None      # overrides the structural branch if set
    realizations: int = 2000
    step: float = 0.5
    init_draws: int = 30_000
    burn_in: int = 100
    master_seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        if self.transfer_fraction < 0.0:
            raise ValueError("transfer_fraction must be non-negative")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")


@dataclass
class TransferGridResult:
    spec: TransferGridSpec
    structural: EconomyParams
    cells: dict  # column name -> np.ndarray over cells

    def column(self, name: str) -> np.ndarray:
        return self.cells[name]


def _resolve_branch(structural: EconomyParams, branch: str | None) -> EconomyParams:
    if branch is None:
        return structural
    if branch == LINEAR:
        return replace(structural, eta=math.inf)
    if branch == COBB_DOUGLAS:
        return replace(structural, eta=1.0)
    raise ValueError(f"unknown production branch: {branch}")


def _grid_chunk(cells, structural: EconomyParams, spec: TransferGridSpec):
    """Calibrate and simulate one chunk of grid cells (lane-vectorised)."""
    lanes = len(cells)
    fit = cal.calibrate_cells(cells, structural, draws=spec.init_draws,
                              burn_in=spec.burn_in, master_seed=spec.master_seed)
    beta, gamma, mu, x = fit["beta"], fit["gamma"], fit["mu"], fit["endowment"]
    ok = np.isfinite(beta) & np.isfinite(x)
    beta_s = np.where(ok, beta, 0.5)
    x_s = np.where(ok, x, 0.0)
    b, branch, rho, sigma = (structural.b, structural.branch, structural.rho,
                             structural.sigma)

    # steady-state initialisation on the dedicated stream
    init_stream = ShockStream(spec.master_seed, STREAM_STEADY_STATE)
    z_init = init_stream.normals(spec.init_draws)
    a_init = np.exp(np.add.outer(sigma * z_init, mu))      # (n, lanes)
    if branch == LINEAR:
        k_path = beta_s[None, :] * (a_init * (1.0 - b) + x_s[None, :])
    else:
        # shared-gauge mu under Cobb-Douglas: one draw array for all lanes
        k_path = cal.no_transfer_capital_path(
            np.exp(mu[0] + sigma * z_init), beta_s, x_s, b, branch, rho)
    kbar = k_path[spec.burn_in:].mean(axis=0)
    sbar = kbar.copy()
    d = spec.transfer_fraction * sbar

    # common random numbers for the policy comparison
    grid_stream = ShockStream(spec.master_seed, STREAM_GRID)
    z = grid_stream.normals(spec.realizations)
    a_seq = np.exp(np.add.outer(sigma * z, mu))            # (T, lanes)
    a_nodes, lw = shock_nodes(structural, ExpectationRule(), mu=mu, sigma=sigma)

    u_base = np.zeros(lanes)
    u_transfer = np.zeros(lanes)
    sum_ln_rf = np.zeros(lanes)
    sum_ln_er = np.zeros(lanes)
    k0 = kbar.copy()
    kd = kbar.copy()
    zero = np.zeros(lanes)
    with np.errstate(over="ignore", under="ignore", invalid="ignore",
                     divide="ignore"):
        for t in range(spec.realizations):
            a_t = a_seq[t]
            # no-transfer economy: exact saving rule, no solve needed
            w0 = _wage_lane(k0, a_t, b, branch, rho)
            cash0 = w0 + x_s
            k0_next = beta_s * cash0
            u_base += cohort_utility(k0_next, cash0, zero, zero, zero,
                                     a_nodes, lw, beta_s, gamma, b, branch, rho)
            ln_c2_1mg, ln_rc2, ln_c2_mg = _moments(k0_next, zero, a_nodes, lw,
                                                   gamma, b, branch, rho)
            ln_rf = ln_rc2 - ln_c2_mg
            r_nodes_mean = _expected_return_lane(k0_next, a_nodes, lw, b,
                                                 branch, rho)
            sum_ln_rf += ln_rf
            sum_ln_er += np.log(r_nodes_mean)
            k0 = k0_next

            # transfer economy: same draws, fixed transfer d
            wd = _wage_lane(kd, a_t, b, branch, rho)
            cash_d = wd + x_s - d
            kd_next, _ = solve_portfolio_vec(cash_d, d, zero, a_nodes, lw,
                                             beta_s, gamma, b, branch, rho)
            u_transfer += cohort_utility(kd_next, cash_d, d, zero, zero,
                                         a_nodes, lw, beta_s, gamma, b,
                                         branch, rho)
            kd = kd_next

    t_count = float(spec.realizations)
    welfare_pct = 100.0 * np.expm1((u_transfer - u_base) / t_count)
    status = np.where(ok & np.isfinite(welfare_pct), "ok", "failed")
    years = structural.period_years
    mean_ln_er = sum_ln_er / t_count
    mean_ln_rf = sum_ln_rf / t_count
    return {
        "safe_annual": fit["safe_annual"],
        "risky_annual": fit["risky_annual"],
        "gamma": gamma,
        "beta": beta,
        "mu": mu,
        "endowment": x,
        "mean_capital": kbar,
        "mean_saving": sbar,
        "transfer_level": d,
        "welfare_change_pct": np.where(ok, welfare_pct, np.nan),
        "achieved_risky_annual": generational_to_annual(np.exp(mean_ln_er), years),
        "achieved_safe_annual": generational_to_annual(np.exp(mean_ln_rf), years),
        "mean_log_spread": mean_ln_rf - mean_ln_er,
        "status": status,
    }


def _wage_lane(k, a, b, branch, rho):
    if branch == LINEAR:
        return a * (1.0 - b)
    if branch == COBB_DOUGLAS:
        return (1.0 - b) * a * k**b
    yoa = (b * k**rho + (1.0 - b)) ** (1.0 / rho)
    return a * (1.0 - b) * yoa ** (1.0 - rho)


def _expected_return_lane(k, a_nodes, lw, b, branch, rho):
    from .household import _return_nodes
    r = _return_nodes(k, a_nodes, b, branch, rho)
    return np.exp(_lse(np.log(r) + lw))


GRID_COLUMNS = ("safe_annual", "risky_annual", "gamma", "beta", "mu",
                "endowment", "mean_capital", "mean_saving", "transfer_level",
                "welfare_change_pct", "achieved_risky_annual",
                "achieved_safe_annual", "mean_log_spread", "status")


def run_transfer_grid(spec: TransferGridSpec,
                      structural: EconomyParams) -> TransferGridResult:
    """Welfare-change grid over (safe, risky) cells for a fixed transfer."""
    structural = _resolve_branch(structural, spec.branch)
    cells = cal.grid_cells(spec.safe_range, spec.risky_range, spec.step)
    if not cells:
        empty = {name: (np.empty(0, dtype=object) if name == "status"
                        else np.empty(0)) for name in GRID_COLUMNS}
        return TransferGridResult(spec=spec, structural=structural, cells=empty)
    chunks = _split(cells, spec.workers)
    if spec.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_grid_chunk_star,
                                  [(c, structural, spec) for c in chunks]))
    else:
        parts = [_grid_chunk(c, structural, spec) for c in chunks]
    merged = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    return TransferGridResult(spec=spec, structural=structural, cells=merged)


def _grid_chunk_star(args):
    return _grid_chunk(*args)


def _split(items, workers):
    if workers <= 1 or len(items) <= 1:
        return [items]
    n_chunks = min(workers, len(items))
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    return [items[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


# ---------------------------------------------------------------------------
# Debt rollover
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RolloverSpec:
    targets: RateTargets
    initial_debt_fraction: float = 0.15
    failure_threshold: float = 1.15
    post_failure_level: float = 0.40
    paths: int = 1000
    generations: int = 6
    failure_rule: str = "reset"     # "reset" | "payoff" | "flag_only"
    branch: str | None = None
    init_draws: int = 30_000
    burn_in: int = 100
    master_seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        if not (self.post_failure_level < 1.0 < self.failure_threshold):
            raise ValueError("need post_failure_level < 1 < failure_threshold")
        if self.paths < 1 or self.generations < 2:
            raise ValueError("need at least one path and two generations")
        if self.failure_rule not in ("reset", "payoff", "flag_only"):
            raise ValueError(f"unknown failure rule: {self.failure_rule}")
        if self.initial_debt_fraction < 0.0:
            raise ValueError("initial_debt_fraction must be non-negative")


@dataclass
class RolloverResult:
    spec: RolloverSpec
    params: EconomyParams
    steady: SteadyState
    debt_share: np.ndarray        # (paths, generations) end-of-period holdings
    debt_due_share: np.ndarray    # (paths, generations) obligation refinanced
    welfare_change: np.ndarray    # (paths, generations) vs no-debt twin, pct
    failed: np.ndarray            # (paths,) bool
    failure_generation: np.ndarray  # (paths,) int, -1 if never
    insolvent: np.ndarray         # (paths,) bool

    def summary(self) -> dict:
        """Per-generation means split by eventual success/failure."""
        out = {"generation": np.arange(self.debt_share.shape[1])}
        fail = self.failed
        for label, mask in (("all", np.ones_like(fail, dtype=bool)),
                            ("success", ~fail), ("failure", fail)):
            if mask.any():
                out[f"mean_welfare_{label}"] = np.nanmean(
                    self.welfare_change[mask], axis=0)
                out[f"mean_debt_share_{label}"] = np.nanmean(
                    self.debt_share[mask], axis=0)
            else:
                gens = self.debt_share.shape[1]
                out[f"mean_welfare_{label}"] = np.full(gens, np.nan)
                out[f"mean_debt_share_{label}"] = np.full(gens, np.nan)
        out["failure_rate"] = np.full(self.debt_share.shape[1],
                                      float(fail.mean()))
        return out


def _rollover_chunk(path_lo: int, path_hi: int, params: EconomyParams,
                    spec: RolloverSpec, kbar: float, sbar: float):
    """Simulate rollover paths [path_lo, path_hi) with their no-debt twins."""
    n = path_hi - path_lo
    gens = spec.generations
    sigma, b, branch, rho = params.sigma, params.b, params.branch, params.rho
    beta, gamma, x = params.beta, params.gamma, params.endowment
    rule = ExpectationRule()
    a_nodes_row, lw = shock_nodes(params, rule)
    a_nodes = np.broadcast_to(a_nodes_row, (n, a_nodes_row.shape[-1]))
    zero = np.zeros(n)

    d0 = spec.initial_debt_fraction * sbar
    threshold = spec.failure_threshold * d0
    post_level = (0.0 if spec.failure_rule == "payoff"
                  else spec.post_failure_level * d0)

    # per-path shock draws for generations 1..gens-1; issuance period uses
    # the mean shock so the transfer lands on the average steady state
    draws = np.empty((gens - 1, n))
    for j, pid in enumerate(range(path_lo, path_hi)):
        stream = ShockStream(spec.master_seed, STREAM_ROLLOVER_BASE + pid)
        draws[:, j] = stream.lognormals(params.mu, sigma, gens - 1)
    a0 = math.exp(params.mu + sigma**2 / 2.0)

    debt_share = np.zeros((n, gens))
    debt_due_share = np.zeros((n, gens))
    welfare = np.zeros((n, gens))
    failed = np.zeros(n, dtype=bool)
    failure_gen = np.full(n, -1, dtype=np.int64)
    insolvent = np.zeros(n, dtype=bool)
    reset_pending = np.zeros(n, dtype=bool)

    # generation 0: old receive their share of the issue on top of R0 * Kbar
    r0 = risky_return(kbar, a0, params)
    w0 = wage(kbar, a0, params)
    welfare[:, 0] = 100.0 * params.old_share * d0 / (r0 * kbar)
    debt_share[:, 0] = d0 / sbar
    debt_due_share[:, 0] = d0 / sbar

    holdings = np.full(n, d0)       # face value held by the young of period t
    rf_next = np.full(n, np.nan)    # rate promised on those holdings
    windfall0 = (1.0 - params.old_share) * d0
    k_debt = np.full(n, kbar)       # capital entering the period (debt economy)
    k_cf = np.full(n, kbar)         # same for the no-debt twin

    def solve_young(t, a_t, tax, hold):
        """Young cohort of period t: joint (K, Rf) solve plus welfare."""
        nonlocal k_debt, k_cf, insolvent
        w_d = _wage_lane(k_debt, a_t, b, branch, rho)
        w_c = _wage_lane(k_cf, a_t, b, branch, rho)
        cash_d = w_d + x + (windfall0 if t == 0 else 0.0) - tax
        cash_c = w_c + x
        feasible = cash_d - hold > 1e-12
        insolvent |= ~feasible
        cash_safe = np.where(feasible, cash_d, 2.0 * hold + 1.0)
        k_next, rf = solve_portfolio_vec(cash_safe, zero, hold, a_nodes, lw,
                                         beta, gamma, b, branch, rho)
        u_debt = cohort_utility(k_next, cash_safe, zero, hold, rf, a_nodes,
                                lw, beta, gamma, b, branch, rho)
        k_cf_new = beta * cash_c
        u_cf = cohort_utility(k_cf_new, cash_c, zero, zero, zero, a_nodes,
                              lw, beta, gamma, b, branch, rho)
        welfare[:, t + 1] = np.where(feasible, 100.0 * np.expm1(u_debt - u_cf),
                                     np.nan)
        k_debt, k_cf = k_next, k_cf_new
        return rf

    with np.errstate(over="ignore", under="ignore", invalid="ignore",
                     divide="ignore"):
        rf_next = solve_young(0, np.full(n, a0), zero, holdings)
        for t in range(1, gens):
            due = rf_next * holdings
            debt_due_share[:, t] = due / sbar
            apply_reset = reset_pending & (spec.failure_rule != "flag_only")
            tax = np.where(apply_reset, due - post_level, 0.0)
            holdings = np.where(apply_reset, post_level, due)
            breach = ~apply_reset & (due > threshold)
            reset_pending = breach.copy()
            first_fail = breach & (failure_gen < 0)
            failure_gen = np.where(first_fail, t, failure_gen)
            failed |= breach
            debt_share[:, t] = holdings / sbar
            if t <= gens - 2:
                rf_next = solve_young(t, draws[t - 1], tax, holdings)

    return {
        "debt_share": debt_share,
        "debt_due_share": debt_due_share,
        "welfare_change": welfare,
        "failed": failed,
        "failure_generation": failure_gen,
        "insolvent": insolvent,
    }


def _rollover_chunk_star(args):
    return _rollover_chunk(*args)


def run_rollover(spec: RolloverSpec, structural: EconomyParams,
                 calibrated: cal.CalibrationResult | None = None) -> RolloverResult:
    """Debt-rollover Monte Carlo with same-stream no-debt counterfactuals."""
    structural = _resolve_branch(structural, spec.branch)
    if calibrated is None:
        calibrated = cal.calibrate(spec.targets, structural,
                                   draws=spec.init_draws, burn_in=spec.burn_in,
                                   master_seed=spec.master_seed)
    params = calibrated.params
    steady = initialize_steady_state(params, realizations=spec.init_draws,
                                     master_seed=spec.master_seed,
                                     burn_in=spec.burn_in)
    kbar, sbar = steady.mean_capital, steady.mean_saving

    bounds = np.linspace(0, spec.paths, min(spec.workers, spec.paths) + 1
                         if spec.workers > 1 else 2).astype(int)
    jobs = [(int(lo), int(hi), params, spec, kbar, sbar)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_rollover_chunk_star, jobs))
    else:
        parts = [_rollover_chunk(*job) for job in jobs]
    merged = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    return RolloverResult(spec=spec, params=params, steady=steady, **merged)


# ---------------------------------------------------------------------------
# Scenario variations
# ---------------------------------------------------------------------------

SCENARIO_VARIATIONS = ("endowment_075", "capital_share_05", "old_share_09",
                       "threshold_110")


def _apply_variation(name: str, structural: EconomyParams,
                     rollover: RolloverSpec):
    if name == "endowment_075":
        return replace(structural, endowment_fraction=0.75), rollover
    if name == "capital_share_05":
        return replace(structural, b=0.5), rollover
    if name == "old_share_09":
        return replace(structural, old_share=0.9), rollover
    if name == "threshold_110":
        return structural, replace(rollover, failure_threshold=1.10)
    raise ValueError(f"unknown scenario variation: {name}")


@dataclass
class ScenarioComparison:
    name: str
    base_rollover: RolloverResult
    variant_rollover: RolloverResult
    base_grid: TransferGridResult | None = None
    variant_grid: TransferGridResult | None = None

    def paired_welfare_diff(self) -> np.ndarray:
        """Per-generation mean of (variant - base) welfare, common streams."""
        return np.nanmean(self.variant_rollover.welfare_change
                          - self.base_rollover.welfare_change, axis=0)


def run_scenarios(rollover_spec: RolloverSpec, structural: EconomyParams,
                  variations=SCENARIO_VARIATIONS,
                  grid_spec: TransferGridSpec | None = None,
                  base_rollover: RolloverResult | None = None,
                  base_grid: TransferGridResult | None = None) -> dict:
    """Paired base/variant campaigns under common random numbers."""
    structural = _resolve_branch(structural, rollover_spec.branch)
    if base_rollover is None:
        base_rollover = run_rollover(rollover_spec, structural)
    if grid_spec is not None and base_grid is None:
        base_grid = run_transfer_grid(grid_spec, structural)
    out = {}
    for name in variations:
        var_structural, var_spec = _apply_variation(name, structural,
                                                    rollover_spec)
        variant = run_rollover(var_spec, var_structural)
        comparison = ScenarioComparison(name=name, base_rollover=base_rollover,
                                        variant_rollover=variant)
        if grid_spec is not None and name == "capital_share_05":
            comparison.base_grid = base_grid
            comparison.variant_grid = run_transfer_grid(grid_spec, var_structural)
        out[name] = comparison
    return out
