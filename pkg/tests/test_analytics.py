"""Sign calculus of the marginal-transfer decomposition."""

import math

import pytest

from olgdebt.analytics import (
    TransferEffect,
    dK_dD_approx,
    direct_effect_sign,
    price_effect,
    total_sign,
)
from olgdebt.model import annual_to_generational


def test_direct_effect_signs():
    assert direct_effect_sign(1.0) == 0
    assert direct_effect_sign(annual_to_generational(-1.0, 25)) == 1   # 0.99^25
    assert direct_effect_sign(annual_to_generational(2.0, 25)) == -1   # 1.02^25


def test_price_effect_zero_cases():
    assert price_effect(1.7, math.inf, 1.0 / 3.0, dK=-0.5) == 0.0
    assert price_effect(1.0, 1.0, 1.0 / 3.0, dK=-0.5) == 0.0


def test_price_effect_sign_structure():
    # R > 1 with dK < 0 is a welfare loss through prices
    assert price_effect(1.5, 1.0, 1.0 / 3.0, dK=-0.2) < 0.0
    assert price_effect(1.5, 1.0, 1.0 / 3.0, dK=0.2) > 0.0
    assert price_effect(0.8, 1.0, 1.0 / 3.0, dK=-0.2) > 0.0


def test_dk_dd_cases():
    assert dK_dD_approx(0.5, 1.0 / 3.0, math.inf, 4.0) == -1.0
    assert dK_dD_approx(0.5, 1.0 / 3.0, 1.0, 4.0) == pytest.approx(-3.0, rel=1e-14)
    with pytest.raises(ZeroDivisionError):
        dK_dD_approx(0.5, 0.5, 1.0, 4.0)


def test_total_sign_boundaries():
    # Cobb-Douglas boundary Rf * ER = 1
    assert total_sign(0.5, 2.0, 0.3, 1.0 / 3.0, 1.0) == 0
    rf = annual_to_generational(-1.0, 25)
    er = annual_to_generational(1.0, 25)
    assert rf * er == pytest.approx(0.9975029977, rel=1e-9)  # 0.9999^25
    assert total_sign(rf, er, 0.3, 1.0 / 3.0, 1.0) == 1
    # linear: only the safe rate matters
    for er_any in (1.0, 2.0, 5.0):
        assert total_sign(0.99, er_any, 0.3, 1.0 / 3.0, math.inf) == 1
        assert total_sign(1.01, er_any, 0.3, 1.0 / 3.0, math.inf) == -1


def test_total_sign_flips_once_along_monotone_path():
    # raising the safe rate along fixed risky crosses the boundary exactly once
    er = annual_to_generational(2.0, 25)
    signs = [total_sign(annual_to_generational(s, 25), er, 0.3, 1.0 / 3.0, 1.0)
             for s in [x / 10.0 for x in range(-40, 21)]]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b and 0 not in (a, b))
    crossings = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    assert signs[0] == 1 and signs[-1] == -1
    assert flips <= 1 and crossings in (1, 2)  # at most one zero touch


def test_transfer_effect_total_sign_invariant():
    eff = TransferEffect(direct_effect=0.4, price_effect=-0.1)
    assert eff.total_sign == 1
    eff = TransferEffect(direct_effect=0.1, price_effect=-0.4)
    assert eff.total_sign == -1
    eff = TransferEffect(direct_effect=0.2, price_effect=-0.2)
    assert eff.total_sign == 0
