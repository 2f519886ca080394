"""Differential ingestion: parsing, alignment, statistics, target ranges."""

import math

import numpy as np
import pytest

from olgdebt.ingest import (
    DifferentialStats,
    RateSeries,
    SeriesFormatError,
    annualize,
    compute_differentials,
    derive_target_ranges,
    read_rate_series,
    summarize,
)


def series(values, kind="safe-yield", start_year=2004):
    obs = tuple(((start_year + i, 0), float(v)) for i, v in enumerate(values))
    return RateSeries(obs, kind=kind, source="test")


def brute_force_stats(values):
    """Independent sort-based implementation of the pinned conventions."""
    xs = sorted(float(v) for v in values)
    n = len(xs)

    def quant(p):
        h = (n - 1) * p
        i = int(math.floor(h))
        f = h - i
        if i + 1 >= n:
            return xs[-1]
        return xs[i] + f * (xs[i + 1] - xs[i])

    return DifferentialStats(median=quant(0.5), mean=sum(xs) / n, max=xs[-1],
                             min=xs[0], q1=quant(0.25), q3=quant(0.75))


def test_differentials_identity_and_arithmetic():
    rate = series([5.0, 6.0])
    growth = series([7.0, 5.0], kind="nominal-growth")
    diff = compute_differentials(rate, growth)
    assert diff.values == [-2.0, 1.0]
    same = compute_differentials(rate, rate)
    assert same.values == [0.0, 0.0]


def test_differentials_antisymmetric():
    a = series([3.0, -1.0, 2.5])
    b = series([1.0, 4.0, 0.5], kind="nominal-growth")
    d1 = compute_differentials(a, b).values
    d2 = compute_differentials(b, a).values
    assert d1 == [-v for v in d2]


def test_differentials_require_overlap_and_units():
    a = series([1.0, 2.0], start_year=2000)
    b = series([1.0, 2.0], start_year=2010, kind="nominal-growth")
    with pytest.raises(ValueError, match="overlap"):
        compute_differentials(a, b)
    frac = RateSeries((((2000, 0), 0.05),), units="fraction")
    with pytest.raises(ValueError, match="percent"):
        compute_differentials(frac, a)


def test_annualize_averages_months():
    obs = (((2004, 8), 4.0), ((2004, 9), 6.0), ((2005, 1), 3.0))
    s = RateSeries(obs, kind="lending-rate")
    out = annualize(s)
    assert out.observations == (((2004, 0), 5.0), ((2005, 0), 3.0))


def test_summarize_small_and_degenerate():
    st = summarize(series([-2.0, -4.0, 0.0]))
    assert (st.median, st.mean, st.max, st.min) == (-2.0, -2.0, 0.0, -4.0)
    single = summarize(series([3.3]))
    assert single.median == single.mean == single.max == single.min == 3.3
    assert single.q1 == single.q3 == 3.3
    with pytest.raises(ValueError):
        summarize([])


def test_summarize_matches_brute_force_oracle_exactly():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        vals = rng.normal(-2.0, 5.0, n).tolist()
        got = summarize(series(vals[:1])) if n == 1 else summarize(vals)
        want = brute_force_stats(vals[:1] if n == 1 else vals)
        assert got == want


def test_summary_order_invariant():
    st = summarize([5.0, -1.0, 2.0, 2.0, -7.0])
    assert st.min <= st.q1 <= st.median <= st.q3 <= st.max


def test_target_ranges_reproduce_published_bounds():
    # key statistics of the 2004-2019 safe and risky differential series
    safe = DifferentialStats(median=-2.82, mean=-4.75, max=0.66, min=-14.10,
                             q1=-7.62, q3=-1.91)
    risky = DifferentialStats(median=1.03, mean=-1.12, max=4.29, min=-11.66,
                              q1=-4.40, q3=1.81)
    ranges = derive_target_ranges(safe, risky, volatility_margin_pp=1.0)
    assert ranges["safe_range"] == (-3.0, 2.0)
    assert ranges["risky_range"] == (1.0, 5.0)


def test_target_ranges_margin_behaviour():
    safe = DifferentialStats(median=-2.82, mean=-4.75, max=0.66, min=-14.10,
                             q1=-7.62, q3=-1.91)
    risky = DifferentialStats(median=1.03, mean=-1.12, max=4.29, min=-11.66,
                              q1=-4.40, q3=1.81)
    r0 = derive_target_ranges(safe, risky, volatility_margin_pp=0.0)
    assert r0["safe_range"] == (-3.0, 1.0)      # rounded extremes, no margin
    assert r0["risky_range"] == (1.0, 4.0)
    r1 = derive_target_ranges(safe, risky, volatility_margin_pp=1.0)
    r2 = derive_target_ranges(safe, risky, volatility_margin_pp=2.0)
    assert r2["safe_range"][1] == r1["safe_range"][1] + 1.0
    assert r2["risky_range"][1] == r1["risky_range"][1] + 1.0


def test_read_rate_series_and_errors(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("# yields\ndate,value\n2004,5.5\n2005-01,6.5\n")
    s = read_rate_series(good, kind="safe-yield")
    assert s.observations == (((2004, 0), 5.5), ((2005, 1), 6.5))

    bad_date = tmp_path / "bad_date.csv"
    bad_date.write_text("date,value\n20x4,5.5\n")
    with pytest.raises(SeriesFormatError, match="line 2"):
        read_rate_series(bad_date)

    bad_value = tmp_path / "bad_value.csv"
    bad_value.write_text("date,value\n2004,abc\n")
    with pytest.raises(SeriesFormatError, match="line 2"):
        read_rate_series(bad_value)

    no_header = tmp_path / "no_header.csv"
    no_header.write_text("year,rate\n2004,5.5\n")
    with pytest.raises(SeriesFormatError, match="header"):
        read_rate_series(no_header)

    unsorted = tmp_path / "unsorted.csv"
    unsorted.write_text("date,value\n2005,1\n2004,2\n")
    with pytest.raises(SeriesFormatError, match="increasing"):
        read_rate_series(unsorted)
