"""Interest-rate-growth differential series and summary statistics.

Consumes user-supplied delimited text series of government bond yields,
lending rates, and nominal growth (percent/year), aligns them on a common
date grid, and produces differential statistics plus calibration target
ranges.

Conventions pinned here because upstream sources mix frequencies:

* dates are ISO years ("2004") or year-months ("2004-08"), strictly
  increasing within a series;
* sub-annual observations aggregate to annual by arithmetic mean;
* quartiles use linear interpolation between order statistics
  (q = x_(i) + f (x_(i+1) - x_(i)) with h = (n-1)p, i = floor(h), f = h-i);
* target ranges take the rounded data maximum plus a volatility margin as
  the upper bound and the rounded median as the lower bound, both rounded
  half away from zero.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass

__all__ = [
    "RateSeries",
    "DifferentialStats",
    "SeriesFormatError",
    "read_rate_series",
    "annualize",
    "compute_differentials",
    "summarize",
    "derive_target_ranges",
]

SERIES_KINDS = ("safe-yield", "lending-rate", "nominal-growth", "differential")


class SeriesFormatError(ValueError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class RateSeries:
    """Ordered (date, value) observations in percent/year.

    Dates are (year, month) tuples; month 0 marks annual observations.
    """

    observations: tuple
    kind: str = "differential"
    source: str = ""
    units: str = "percent"

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind: {self.kind}")
        dates = [d for d, _ in self.observations]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if any(not math.isfinite(v) for _, v in self.observations):
            raise ValueError("values must be finite")

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.observations]

    def __len__(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class DifferentialStats:
    median: float
    mean: float
    max: float
    min: float
    q1: float
    q3: float

    def __post_init__(self):
        order = (self.min, self.q1, self.median, self.q3, self.max)
        if any(b < a for a, b in zip(order, order[1:])):
            raise ValueError("statistics must satisfy min <= q1 <= median "
                             "<= q3 <= max")


_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2}))?$")


def _parse_date(token: str, line: int):
    m = _DATE_RE.match(token.strip())
    if not m:
        raise SeriesFormatError(
            f"date {token!r} is not ISO year or year-month", line)
    year = int(m.group(1))
    month = int(m.group(2)) if m.group(2) else 0
    if month > 12:
        raise SeriesFormatError(f"month out of range in {token!r}", line)
    return (year, month)


def read_rate_series(path, kind: str = "differential", source: str = "",
                     units: str = "percent") -> RateSeries:
    """Read a delimited text file with a (date, value) header row."""
    obs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or (row[0].strip().startswith("#")):
                continue
            cells = [c.strip() for c in row]
            if header is None:
                lowered = [c.lower() for c in cells]
                if "date" not in lowered or "value" not in lowered:
                    raise SeriesFormatError(
                        "header row must name 'date' and 'value' columns",
                        lineno)
                header = (lowered.index("date"), lowered.index("value"))
                continue
            if len(cells) <= max(header):
                raise SeriesFormatError("too few columns", lineno)
            date = _parse_date(cells[header[0]], lineno)
            try:
                value = float(cells[header[1]])
            except ValueError:
                raise SeriesFormatError(
                    f"value {cells[header[1]]!r} is not a number", lineno)
            obs.append((date, value))
        if header is None:
            raise SeriesFormatError("empty file: no header row found")
    if not obs:
        raise SeriesFormatError("no observations after the header")
    try:
        return RateSeries(tuple(obs), kind=kind, source=source or str(path),
                          units=units)
    except ValueError as exc:
        raise SeriesFormatError(str(exc))


def annualize(series: RateSeries) -> RateSeries:
    """Aggregate sub-annual observations to annual arithmetic means."""
    by_year: dict[int, list[float]] = {}
    for (year, _month), value in series.observations:
        by_year.setdefault(year, []).append(value)
    obs = tuple(((year, 0), sum(vals) / len(vals))
                for year, vals in sorted(by_year.items()))
    return RateSeries(obs, kind=series.kind, source=series.source,
                      units=series.units)


def compute_differentials(rate_series: RateSeries, growth_series: RateSeries,
                          alignment_rule: str = "annual") -> RateSeries:
    """Pointwise rate minus growth on the aligned date grid."""
    for s in (rate_series, growth_series):
        if s.units != "percent":
            raise ValueError(
                f"series {s.source!r} is in {s.units}, not percent")
    if alignment_rule == "annual":
        rate = annualize(rate_series)
        growth = annualize(growth_series)
    elif alignment_rule == "exact":
        rate, growth = rate_series, growth_series
    else:
        raise ValueError(f"unknown alignment rule: {alignment_rule}")
    growth_map = dict(growth.observations)
    obs = tuple((d, v - growth_map[d]) for d, v in rate.observations
                if d in growth_map)
    if not obs:
        raise ValueError("no overlapping dates between rate and growth series")
    return RateSeries(obs, kind="differential",
                      source=f"{rate_series.source} - {growth_series.source}")


def _quantile_type7(sorted_values: list[float], p: float) -> float:
    n = len(sorted_values)
    h = (n - 1) * p
    i = math.floor(h)
    f = h - i
    if i + 1 >= n:
        return sorted_values[-1]
    return sorted_values[i] + f * (sorted_values[i + 1] - sorted_values[i])


def summarize(series) -> DifferentialStats:
    """Median, mean, extremes, and quartiles of a differential series."""
    values = series.values if isinstance(series, RateSeries) else list(series)
    if len(values) == 0:
        raise ValueError("cannot summarize an empty series")
    s = sorted(float(v) for v in values)
    return DifferentialStats(
        median=_quantile_type7(s, 0.5),
        mean=sum(s) / len(s),
        max=s[-1],
        min=s[0],
        q1=_quantile_type7(s, 0.25),
        q3=_quantile_type7(s, 0.75),
    )


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0.0 else -int(math.floor(-x + 0.5))


def derive_target_ranges(safe_stats: DifferentialStats,
                         risky_stats: DifferentialStats,
                         volatility_margin_pp: float = 1.0) -> dict:
    """Calibration ranges in percent/year from differential statistics.

    Upper bounds: the rounded data maximum plus the volatility margin
    (series maxima understate forward-looking risk for a volatile economy).
    Lower bounds: the rounded median, the central tendency the simulation
    grid should reach down to.
    """
    def _range(stats):
        lower = _round_half_away(stats.median)
        upper = _round_half_away(stats.max) + volatility_margin_pp
        return (float(lower), float(upper))

    return {"safe_range": _range(safe_stats), "risky_range": _range(risky_stats)}
