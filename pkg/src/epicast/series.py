"""Daily time series keyed by geo-unit.

A :class:`TimeSeries` is gap-free by construction: it stores the first
calendar date and a contiguous vector of daily values, so the "strictly
increasing, daily cadence" invariant cannot be violated after the fact.
Day offsets are integers counted from the series start (t0 = 0).
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

ONE_DAY = dt.timedelta(days=1)


def parse_date(text: str) -> dt.date:
    """Parse an ISO-8601 calendar date, raising ValueError on anything else."""
    return dt.date.fromisoformat(text.strip())


def date_range(start: dt.date, n: int) -> list[dt.date]:
    return [start + dt.timedelta(days=i) for i in range(n)]


@dataclass(frozen=True)
class TimeSeries:
    """Dated scalar observations (cases, deaths, mobility) for one geo-unit."""

    geo_id: str
    start: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError(f"{self.geo_id}: values must be a non-empty 1-d vector")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.geo_id}: values must be finite")
        if np.any(vals < 0):
            raise ValueError(f"{self.geo_id}: values must be non-negative")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> dt.date:
        return self.start + dt.timedelta(days=len(self) - 1)

    @property
    def dates(self) -> list[dt.date]:
        return date_range(self.start, len(self))

    def day_offset(self, date: dt.date) -> int:
        return (date - self.start).days

    def value_on(self, date: dt.date) -> float:
        off = self.day_offset(date)
        if not 0 <= off < len(self):
            raise KeyError(f"{date} outside series {self.start}..{self.end}")
        return float(self.values[off])

    @classmethod
    def from_dates(cls, geo_id: str, dates, values) -> "TimeSeries":
        """Build from explicit date/value pairs, verifying the daily cadence."""
        dates = list(dates)
        if not dates:
            raise ValueError("empty date list")
        for prev, cur in zip(dates, dates[1:]):
            if (cur - prev).days != 1:
                raise ValueError(f"dates not gap-free daily: {prev} -> {cur}")
        vals = np.asarray(list(values), dtype=float)
        if vals.size != len(dates):
            raise ValueError("dates and values length mismatch")
        return cls(geo_id, dates[0], vals)

    @classmethod
    def from_sparse(cls, geo_id: str, pairs, fill: str) -> "TimeSeries":
        """Build a gap-free daily series from sparse (date, value) pairs.

        ``fill`` is ``"ffill"`` (carry last value forward; right for cumulative
        counts) or ``"linear"`` (interpolate; right for continuous indices).
        Duplicate dates must be resolved by the caller beforehand.
        """
        if not pairs:
            raise ValueError("no observations")
        pairs = sorted(pairs, key=lambda p: p[0])
        start, end = pairs[0][0], pairs[-1][0]
        n = (end - start).days + 1
        known_off = np.array([(d - start).days for d, _ in pairs])
        known_val = np.array([v for _, v in pairs], dtype=float)
        if np.unique(known_off).size != known_off.size:
            raise ValueError("duplicate dates must be resolved before filling")
        if fill == "ffill":
            vals = np.empty(n)
            j = 0
            for i in range(n):
                if j + 1 < known_off.size and known_off[j + 1] <= i:
                    j += 1
                vals[i] = known_val[j]
        elif fill == "linear":
            vals = np.interp(np.arange(n), known_off, known_val)
        else:
            raise ValueError(f"unknown fill mode {fill!r}")
        return cls(geo_id, start, vals)

    def to_json(self) -> dict:
        return {
            "geo_id": self.geo_id,
            "start": self.start.isoformat(),
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TimeSeries":
        return cls(obj["geo_id"], parse_date(obj["start"]), np.asarray(obj["values"], dtype=float))
