"""CSV loaders that normalize raw data files into canonical daily series.

Four file kinds are understood (see README for the schemas):

* ``cases.csv``      -- ``geo_id,date,cum_cases,cum_deaths``
* ``mobility.csv``   -- ``geo_id,date,mobility_index``
* ``commute.csv``    -- ``home_id,work_id,workers``
* ``population.csv`` -- ``geo_id,population``

Malformed rows (bad dates, negative counts, non-numeric fields) are
rejected individually and reported with their line numbers; only an empty
file or a wrong header is fatal.  Loading is a pure function of the file
bytes, so loaders are safe to call concurrently across files.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

from .series import TimeSeries, parse_date


class IngestError(Exception):
    """Fatal input problem: missing file, wrong header, or no usable rows."""


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass
class CaseTables:
    """Cumulative case and death series per geo_id, plus the rejection report."""

    cases: dict[str, TimeSeries] = field(default_factory=dict)
    deaths: dict[str, TimeSeries] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)


@dataclass
class MobilityTables:
    series: dict[str, TimeSeries] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)


@dataclass
class CommuteTable:
    """Directed weighted commute edges; duplicates summed, self-loops kept."""

    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)

    def rows(self) -> list[tuple[str, str, float]]:
        return [(h, w, v) for (h, w), v in sorted(self.edges.items())]


@dataclass
class PopulationTable:
    population: dict[str, float] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)


def _open_rows(path, expected_header: list[str]):
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected_header:
            raise IngestError(f"{path}: expected header {expected_header}, got {header}")
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=2) if row]
    if not rows:
        raise IngestError(f"{path}: no data rows")
    return rows


def load_cases(path) -> CaseTables:
    """Load cumulative cases/deaths into gap-free daily series per geo_id.

    Interior missing dates are forward-filled from the last cumulative value
    (cumulative counts are step functions of reporting); dates before the
    first report are omitted.  Duplicate (geo_id, date) rows keep the maximum
    cumulative value, since late corrections are usually upward.
    """
    out = CaseTables()
    per_geo: dict[str, dict[dt.date, tuple[float, float]]] = {}
    for lineno, row in _open_rows(path, ["geo_id", "date", "cum_cases", "cum_deaths"]):
        if len(row) != 4:
            out.rejected.append(RejectedRow(lineno, f"expected 4 fields, got {len(row)}"))
            continue
        geo = row[0].strip()
        try:
            date = parse_date(row[1])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"bad date {row[1]!r}"))
            continue
        try:
            cc, cd = float(row[2]), float(row[3])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"non-numeric count in {row[2:4]!r}"))
            continue
        if cc < 0 or cd < 0:
            out.rejected.append(RejectedRow(lineno, f"negative count in {row[2:4]!r}"))
            continue
        bucket = per_geo.setdefault(geo, {})
        if date in bucket:
            prev = bucket[date]
            bucket[date] = (max(prev[0], cc), max(prev[1], cd))
        else:
            bucket[date] = (cc, cd)
    if not per_geo:
        raise IngestError(f"{path}: every row rejected")
    for geo, bucket in per_geo.items():
        case_pairs = [(d, v[0]) for d, v in bucket.items()]
        death_pairs = [(d, v[1]) for d, v in bucket.items()]
        out.cases[geo] = TimeSeries.from_sparse(geo, case_pairs, fill="ffill")
        out.deaths[geo] = TimeSeries.from_sparse(geo, death_pairs, fill="ffill")
    return out


def load_mobility(path) -> MobilityTables:
    """Load one daily mobility-index series per geo_id.

    Interior gaps are linearly interpolated; mobility is a continuous index,
    not a count.  Duplicate (geo_id, date) rows average (repeated readings).
    """
    out = MobilityTables()
    per_geo: dict[str, dict[dt.date, list[float]]] = {}
    for lineno, row in _open_rows(path, ["geo_id", "date", "mobility_index"]):
        if len(row) != 3:
            out.rejected.append(RejectedRow(lineno, f"expected 3 fields, got {len(row)}"))
            continue
        geo = row[0].strip()
        try:
            date = parse_date(row[1])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"bad date {row[1]!r}"))
            continue
        try:
            idx = float(row[2])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"non-numeric index {row[2]!r}"))
            continue
        if idx < 0:
            out.rejected.append(RejectedRow(lineno, f"negative index {row[2]!r}"))
            continue
        per_geo.setdefault(geo, {}).setdefault(date, []).append(idx)
    if not per_geo:
        raise IngestError(f"{path}: every row rejected")
    for geo, bucket in per_geo.items():
        pairs = [(d, sum(v) / len(v)) for d, v in bucket.items()]
        out.series[geo] = TimeSeries.from_sparse(geo, pairs, fill="linear")
    return out


def load_commute(path) -> CommuteTable:
    """Load directed commute flows.  Unknown geo ids are retained (clustering
    does not depend on case data); duplicate (home, work) pairs are summed."""
    out = CommuteTable()
    for lineno, row in _open_rows(path, ["home_id", "work_id", "workers"]):
        if len(row) != 3:
            out.rejected.append(RejectedRow(lineno, f"expected 3 fields, got {len(row)}"))
            continue
        home, work = row[0].strip(), row[1].strip()
        try:
            workers = float(row[2])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"non-numeric workers {row[2]!r}"))
            continue
        if workers < 0:
            out.rejected.append(RejectedRow(lineno, f"negative workers {row[2]!r}"))
            continue
        key = (home, work)
        out.edges[key] = out.edges.get(key, 0.0) + workers
    return out


def load_population(path) -> PopulationTable:
    out = PopulationTable()
    for lineno, row in _open_rows(path, ["geo_id", "population"]):
        if len(row) != 2:
            out.rejected.append(RejectedRow(lineno, f"expected 2 fields, got {len(row)}"))
            continue
        geo = row[0].strip()
        try:
            pop = float(row[1])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"non-numeric population {row[1]!r}"))
            continue
        if pop <= 0:
            out.rejected.append(RejectedRow(lineno, f"non-positive population {row[1]!r}"))
            continue
        out.population[geo] = pop
    if not out.population:
        raise IngestError(f"{path}: every row rejected")
    return out


def write_cases(path, cases: dict[str, TimeSeries], deaths: dict[str, TimeSeries]) -> None:
    """Write case/death series back to the cases.csv schema (round-trip safe)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["geo_id", "date", "cum_cases", "cum_deaths"])
        for geo in sorted(cases):
            cs, ds = cases[geo], deaths[geo]
            for date, cc, cd in zip(cs.dates, cs.values, ds.values):
                writer.writerow([geo, date.isoformat(), f"{cc:g}", f"{cd:g}"])


def write_mobility(path, series: dict[str, TimeSeries]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["geo_id", "date", "mobility_index"])
        for geo in sorted(series):
            ts = series[geo]
            for date, v in zip(ts.dates, ts.values):
                writer.writerow([geo, date.isoformat(), repr(float(v))])


@dataclass
class CensusTables:
    """Hospital and ICU census series per geo_id."""

    hosp: dict[str, TimeSeries] = field(default_factory=dict)
    icu: dict[str, TimeSeries] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)


def load_hosp_census(path) -> CensusTables:
    """Load daily hospital/ICU census counts (gaps linearly interpolated)."""
    out = CensusTables()
    per_geo: dict[str, dict[dt.date, tuple[float, float]]] = {}
    for lineno, row in _open_rows(path, ["geo_id", "date", "hosp_census", "icu_census"]):
        if len(row) != 4:
            out.rejected.append(RejectedRow(lineno, f"expected 4 fields, got {len(row)}"))
            continue
        geo = row[0].strip()
        try:
            date = parse_date(row[1])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"bad date {row[1]!r}"))
            continue
        try:
            h, u = float(row[2]), float(row[3])
        except ValueError:
            out.rejected.append(RejectedRow(lineno, f"non-numeric census in {row[2:4]!r}"))
            continue
        if h < 0 or u < 0:
            out.rejected.append(RejectedRow(lineno, f"negative census in {row[2:4]!r}"))
            continue
        per_geo.setdefault(geo, {})[date] = (h, u)
    if not per_geo:
        raise IngestError(f"{path}: every row rejected")
    for geo, bucket in per_geo.items():
        out.hosp[geo] = TimeSeries.from_sparse(
            geo, [(d, v[0]) for d, v in bucket.items()], fill="linear")
        out.icu[geo] = TimeSeries.from_sparse(
            geo, [(d, v[1]) for d, v in bucket.items()], fill="linear")
    return out


def load_states(path) -> dict[str, str]:
    """Load the optional county-to-state map used to constrain clustering."""
    states: dict[str, str] = {}
    for _, row in _open_rows(path, ["geo_id", "state"]):
        if len(row) != 2:
            continue
        states[row[0].strip()] = row[1].strip()
    if not states:
        raise IngestError(f"{path}: no usable rows")
    return states


def write_hosp_census(path, hosp: dict[str, TimeSeries],
                      icu: dict[str, TimeSeries]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["geo_id", "date", "hosp_census", "icu_census"])
        for geo in sorted(hosp):
            hs, us = hosp[geo], icu[geo]
            for date, h, u in zip(hs.dates, hs.values, us.values):
                writer.writerow([geo, date.isoformat(), f"{h:.6g}", f"{u:.6g}"])
