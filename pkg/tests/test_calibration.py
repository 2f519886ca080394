"""Calibration: gamma from the spread, branch fits, verified rates."""

import math
from dataclasses import replace

import numpy as np
import pytest

from olgdebt import calibration as cal
from olgdebt.model import EconomyParams, RateTargets, annual_to_generational
from olgdebt.shocks import ShockStream

CD_BASE = EconomyParams(eta=1.0, mu=-0.02)  # E[A] = 1 gauge
LIN_BASE = EconomyParams(eta=math.inf, beta=0.5)


def test_gamma_zero_spread():
    assert cal.gamma_from_spread(RateTargets(1.5, 1.5), 0.2) == 0.0


def test_gamma_frozen_oracles():
    # ln(1.02^25 / 0.99^25) / 0.04 and ln(1.03^25 / 0.995^25) / 0.04
    assert cal.gamma_from_spread(RateTargets(-1.0, 2.0), 0.2) == \
        pytest.approx(18.6581020, abs=1e-6)
    assert cal.gamma_from_spread(RateTargets(-0.5, 3.0), 0.2) == \
        pytest.approx(21.6070900, abs=1e-6)


def test_fit_risky_linear_closed_form():
    mu = cal.fit_risky_linear(2.0, LIN_BASE)
    assert mu == pytest.approx(math.log(3.0 * 1.02**25) - 0.02, rel=1e-12)
    # gross target equal to b means E[A] = 1
    p_tiny = replace(LIN_BASE, sigma=1e-9)
    target = 100.0 * ((1.0 / 3.0) ** (1.0 / 25.0) - 1.0)
    assert cal.fit_risky_linear(target, p_tiny) == pytest.approx(0.0, abs=1e-9)
    # doubling b halves e^mu at a fixed target
    mu_2b = cal.fit_risky_linear(2.0, replace(LIN_BASE, b=2.0 / 3.0))
    assert math.exp(mu_2b) == pytest.approx(math.exp(mu) / 2.0, rel=1e-12)


def test_fit_risky_linear_against_sample_mean():
    mu = cal.fit_risky_linear(2.0, LIN_BASE)
    a = ShockStream(99, 0).lognormals(mu, LIN_BASE.sigma, 10**6)
    er_sample = np.mean(a * LIN_BASE.b)
    assert er_sample == pytest.approx(1.02**25, rel=3e-4)


def test_paper_warm_start_approximation():
    assert cal.risky_rate_warm_approx(1.0 / 3.0, 0.5) == pytest.approx(4.0)


def test_fit_cobb_douglas_hits_target():
    res = cal.calibrate(RateTargets(-1.0, 2.0), CD_BASE, master_seed=7)
    assert abs(res.achieved_risky_annual - 2.0) < 0.1
    assert abs(res.achieved_safe_annual - (-1.0)) < 0.2
    assert 0.0 < res.params.beta < 1.0
    assert res.params.endowment > 0.0


def test_fit_cobb_douglas_infeasible_target():
    # gross generational target below the beta -> 1 boundary
    with pytest.raises(cal.CalibrationError):
        cal.fit_risky_cobb_douglas(-7.0, CD_BASE)


def test_calibrate_midpoints_and_zero_spread():
    indo = cal.calibrate(RateTargets(-0.5, 3.0), CD_BASE, master_seed=7)
    assert abs(indo.achieved_risky_annual - 3.0) < 0.1
    assert abs(indo.achieved_safe_annual - (-0.5)) < 0.2
    flat = cal.calibrate(RateTargets(1.0, 1.0), CD_BASE, master_seed=7)
    assert flat.params.gamma == 0.0
    # safe is priced on a subsample of periods; identity holds to ~0.01pp
    assert flat.achieved_safe_annual == pytest.approx(flat.achieved_risky_annual,
                                                      abs=0.01)


def test_spread_identity_in_simulation():
    res = cal.calibrate(RateTargets(-1.0, 2.0), CD_BASE, master_seed=7)
    stats = cal.no_transfer_stats(res.params, master_seed=7)
    expected = -res.params.gamma * res.params.sigma**2
    assert stats["mean_log_spread"] == pytest.approx(expected, abs=1e-3)


def test_linear_branch_ignores_beta():
    r1 = cal.calibrate(RateTargets(-1.0, 2.0), replace(LIN_BASE, beta=0.3),
                       master_seed=7)
    r2 = cal.calibrate(RateTargets(-1.0, 2.0), replace(LIN_BASE, beta=0.7),
                       master_seed=7)
    assert r1.achieved_risky_annual == pytest.approx(r2.achieved_risky_annual,
                                                     abs=1e-12)


def test_cobb_douglas_mu_is_pure_gauge():
    res_a = cal.calibrate(RateTargets(-1.0, 2.0), CD_BASE, master_seed=7)
    res_b = cal.calibrate(RateTargets(-1.0, 2.0), replace(CD_BASE, mu=0.5),
                          master_seed=7)
    assert res_a.achieved_risky_annual == pytest.approx(
        res_b.achieved_risky_annual, abs=2e-3)
    assert res_a.achieved_safe_annual == pytest.approx(
        res_b.achieved_safe_annual, abs=2e-3)


def test_calibration_idempotent():
    res = cal.calibrate(RateTargets(-0.5, 3.0), CD_BASE, master_seed=7)
    again = cal.calibrate(
        RateTargets(res.achieved_safe_annual, res.achieved_risky_annual),
        CD_BASE, master_seed=7)
    assert again.params.beta == pytest.approx(res.params.beta, rel=2e-3)
    assert again.params.gamma == pytest.approx(res.params.gamma, rel=2e-3)


def test_grid_cells_filtering():
    original = cal.grid_cells((-2.0, 1.0), (0.0, 4.0))
    indonesia = cal.grid_cells((-3.0, 2.0), (1.0, 5.0))
    assert len(original) == 60
    assert len(indonesia) == 96
    assert all(s <= r for s, r in original + indonesia)
    assert (-2.0, 0.0) in original and (1.0, 0.5) not in original


def test_calibrate_cells_vector_matches_scalar():
    cells = [(-1.0, 2.0), (-0.5, 3.0), (0.0, 1.0)]
    grid = cal.calibrate_cells(cells, CD_BASE, master_seed=7)
    for i, (s, r) in enumerate(cells):
        single_beta, single_x = cal.fit_risky_cobb_douglas(r, CD_BASE,
                                                           master_seed=7)
        assert grid["beta"][i] == pytest.approx(single_beta, rel=1e-12)
        assert grid["endowment"][i] == pytest.approx(single_x, rel=1e-12)
        assert grid["gamma"][i] == pytest.approx(
            cal.gamma_from_spread(RateTargets(s, r), 0.2), rel=1e-12)


def test_steady_state_divergence_guard():
    # an absurdly productive economy with beta near one blows up under CES>CD
    p = EconomyParams(eta=1.0, mu=8.0, sigma=0.2, beta=0.9, endowment=0.0)
    stats = cal.no_transfer_stats(p, draws=2000, master_seed=1)
    assert math.isfinite(stats["mean_capital"])  # CD is globally stable
