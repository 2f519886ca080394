"""Campaign engines: steady state, transfer grids, rollovers, scenarios.

Contract-level tests on reduced draw counts; the paper-magnitude checks run
in the acceptance module at full size.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from olgdebt.calibration import CalibrationError
from olgdebt.experiments import (
    RolloverSpec,
    TransferGridSpec,
    initialize_steady_state,
    run_rollover,
    run_scenarios,
    run_transfer_grid,
)
from olgdebt.model import EconomyParams, RateTargets

LIN = EconomyParams(eta=math.inf, beta=0.25)
CD = EconomyParams(eta=1.0, beta=0.25, mu=-0.02)

SMALL_ROLLOVER = dict(paths=48, init_draws=4000, burn_in=50)
SMALL_GRID = dict(realizations=150, init_draws=4000, burn_in=50)


def small_rollover(targets=(-1.0, 2.0), **over):
    kw = {**SMALL_ROLLOVER, **over}
    return RolloverSpec(targets=RateTargets(*targets), **kw)


def test_steady_state_deterministic_limit():
    p = EconomyParams(eta=math.inf, beta=0.4, mu=0.3, sigma=1e-10,
                      endowment_fraction=0.0, endowment=0.0)
    ss = initialize_steady_state(p, realizations=2000, master_seed=3)
    closed = p.beta * math.exp(p.mu) * (1.0 - p.b)
    assert ss.mean_capital == pytest.approx(closed, rel=1e-8)
    assert ss.mean_saving == ss.mean_capital


def test_steady_state_converged_and_reproducible():
    p = replace(CD, beta=0.15, endowment=0.3, gamma=18.0)
    a = initialize_steady_state(p, realizations=8000, master_seed=5)
    b = initialize_steady_state(p, realizations=8000, master_seed=5)
    assert a == b
    c = initialize_steady_state(p, realizations=16000, master_seed=5)
    assert c.mean_capital == pytest.approx(a.mean_capital, rel=0.01)


def test_transfer_grid_zero_transfer_is_identically_zero():
    spec = TransferGridSpec(safe_range=(-1.0, -1.0), risky_range=(1.0, 2.0),
                            transfer_fraction=0.0, **SMALL_GRID)
    res = run_transfer_grid(spec, LIN)
    np.testing.assert_array_equal(res.cells["welfare_change_pct"],
                                  np.zeros(len(res.cells["safe_annual"])))


def test_transfer_grid_deterministic_and_worker_invariant():
    spec = TransferGridSpec(safe_range=(-1.5, -0.5), risky_range=(1.0, 2.0),
                            transfer_fraction=0.05, **SMALL_GRID)
    r1 = run_transfer_grid(spec, CD)
    r2 = run_transfer_grid(spec, CD)
    np.testing.assert_array_equal(r1.cells["welfare_change_pct"],
                                  r2.cells["welfare_change_pct"])
    r4 = run_transfer_grid(replace(spec, workers=4), CD)
    np.testing.assert_array_equal(r1.cells["welfare_change_pct"],
                                  r4.cells["welfare_change_pct"])


def test_transfer_grid_failed_cells_are_marked():
    # risky targets far below feasibility make the Cobb-Douglas fit fail
    spec = TransferGridSpec(safe_range=(-8.0, -8.0), risky_range=(-7.0, -6.0),
                            transfer_fraction=0.05, **SMALL_GRID)
    res = run_transfer_grid(spec, CD)
    assert np.all(res.cells["status"] == "failed")
    assert np.all(np.isnan(res.cells["welfare_change_pct"]))


def test_transfer_grid_linear_sign_follows_safe_axis():
    spec = TransferGridSpec(safe_range=(-2.0, 1.0), risky_range=(2.0, 2.0),
                            transfer_fraction=0.05, **SMALL_GRID)
    res = run_transfer_grid(spec, LIN)
    w = res.cells["welfare_change_pct"]
    s = res.cells["safe_annual"]
    assert np.all(w[s <= -0.5] > 0.0)
    assert np.all(w[s >= 0.5] < 0.0)


def test_rollover_zero_issue_couples_to_counterfactual():
    spec = small_rollover(initial_debt_fraction=0.0)
    res = run_rollover(spec, CD)
    np.testing.assert_array_equal(res.welfare_change,
                                  np.zeros_like(res.welfare_change))
    np.testing.assert_array_equal(res.debt_share,
                                  np.zeros_like(res.debt_share))
    assert not res.failed.any()


def test_rollover_initial_share_and_gen0_gain():
    res = run_rollover(small_rollover(), CD)
    np.testing.assert_allclose(res.debt_share[:, 0], 0.15, rtol=1e-12)
    assert np.all(res.welfare_change[:, 0] > 0.0)
    # single value across paths: issuance period uses the mean shock
    assert np.ptp(res.welfare_change[:, 0]) == 0.0


def test_rollover_reset_mechanics_exact():
    spec = small_rollover(targets=(-0.5, 3.0), paths=200)
    res = run_rollover(spec, CD)
    assert res.failed.any(), "expected failures at the Indonesia midpoint"
    post_share = spec.post_failure_level * spec.initial_debt_fraction
    checked = 0
    for p in np.flatnonzero(res.failed):
        g = res.failure_generation[p]
        assert g >= 1
        assert res.debt_due_share[p, g] > spec.failure_threshold * 0.15
        if g + 1 < spec.generations:
            # the reset generation holds exactly the post-failure level
            assert res.debt_share[p, g + 1] == pytest.approx(post_share,
                                                             rel=1e-12)
            checked += 1
    assert checked > 0


def test_rollover_failure_monotone_in_threshold():
    base = run_rollover(small_rollover(targets=(-0.5, 3.0), paths=200), CD)
    tight = run_rollover(small_rollover(targets=(-0.5, 3.0), paths=200,
                                        failure_threshold=1.10), CD)
    assert tight.failed.sum() >= base.failed.sum()


def test_rollover_worker_and_order_invariance():
    spec = small_rollover(paths=40)
    r1 = run_rollover(spec, CD)
    r4 = run_rollover(replace(spec, workers=4), CD)
    np.testing.assert_array_equal(r1.debt_share, r4.debt_share)
    np.testing.assert_array_equal(r1.welfare_change, r4.welfare_change)
    # a single path simulated alone reproduces its in-batch values
    solo = run_rollover(replace(spec, paths=1), CD)
    np.testing.assert_allclose(solo.debt_share[0], r1.debt_share[0],
                               rtol=1e-12, atol=1e-15)


def test_rollover_riskless_limit_debt_grows_at_risky_rate():
    p = EconomyParams(eta=math.inf, beta=0.4, mu=math.log(3.0) + 0.1,
                      sigma=1e-9, gamma=5.0)
    spec = small_rollover(targets=(2.0, 2.0), paths=3, generations=4)
    # calibrate() would refit mu; run with explicit params via targets that
    # match the deterministic risky rate of this mu
    from olgdebt import calibration as cal
    target = cal.generational_to_annual(math.exp(p.mu) * p.b, 25.0)
    spec = small_rollover(targets=(target, target), paths=3, generations=4)
    res = run_rollover(spec, p)
    r_gross = math.exp(res.params.mu) * p.b
    ratio = res.debt_share[:, 2] / res.debt_share[:, 1]
    np.testing.assert_allclose(ratio, r_gross, rtol=1e-6)


def test_rollover_flag_only_lets_debt_roll_on():
    spec = small_rollover(targets=(-0.5, 3.0), paths=100,
                          failure_rule="flag_only")
    res = run_rollover(spec, CD)
    assert res.failed.any()
    # no resets: holdings equal the maturing obligation everywhere
    np.testing.assert_allclose(res.debt_share[:, 1:], res.debt_due_share[:, 1:],
                               rtol=1e-12)


def test_scenarios_run_paired_and_report_diffs():
    spec = small_rollover(paths=24)
    out = run_scenarios(spec, CD, variations=("old_share_09", "threshold_110"))
    assert set(out) == {"old_share_09", "threshold_110"}
    cmp_os = out["old_share_09"]
    diffs = cmp_os.paired_welfare_diff()
    assert diffs.shape == (spec.generations,)
    # threshold variation keeps the same economy, only the breach rule moves
    cmp_th = out["threshold_110"]
    assert cmp_th.variant_rollover.failed.sum() >= \
        cmp_th.base_rollover.failed.sum()
    assert cmp_th.variant_rollover.params == cmp_th.base_rollover.params


def test_rollover_summary_structure():
    res = run_rollover(small_rollover(targets=(-0.5, 3.0), paths=60), CD)
    summary = res.summary()
    gens = res.debt_share.shape[1]
    assert summary["generation"].shape == (gens,)
    assert summary["failure_rate"][0] == res.failed.mean()
    assert np.isfinite(summary["mean_welfare_all"]).all()
