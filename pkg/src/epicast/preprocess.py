"""Series denoising and transmission-regime inflection detection.

Cumulative counts are made monotone by exact weighted isotonic regression
(pool-adjacent-violators).  Daily counts, derived as first differences of
the isotonic fit, are smoothed with an adaptive-degree polynomial filter:
at each point a local polynomial is fitted over a centered window and the
degree is chosen by F-tests, so sharp features keep high degree while flat
stretches fall back to near-averaging.  Inflection points of the smoothed
daily curve (knees = downturns, elbows = upturns) are found with a
normalized-difference-curve scan over sliding segments, merged within
7 days, and validated against two weeks of subsequent monotone behavior.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .series import TimeSeries

ADPF_WINDOW = 13          # > one reporting week
ADPF_MAX_DEGREE = 6
ADPF_CONFIDENCE = 0.95
MERGE_GAP_DAYS = 7
VALIDATE_DAYS = 14
MIN_VALIDATE_DAYS = 7
SEGMENT_DAYS = 21
SEGMENT_STEP = 3
MIN_PREVALENCE = 1.0      # 7-day mean daily cases gating detection onset


@dataclass(frozen=True)
class IsotonicProblem:
    """Weighted least-squares fit under a non-decreasing total order."""

    a: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("observations must be a non-empty vector")
        if w.shape != a.shape:
            raise ValueError("weights shape must match observations")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)


def isotonic_fit(problem: IsotonicProblem) -> np.ndarray:
    """Exact minimizer of sum w_i (x_i - a_i)^2 with x non-decreasing (PAVA)."""
    a, w = problem.a, problem.w
    # blocks of (pooled weighted mean, total weight, run length)
    means: list[float] = []
    weights: list[float] = []
    lengths: list[int] = []
    for ai, wi in zip(a, w):
        means.append(float(ai))
        weights.append(float(wi))
        lengths.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, n2 = means.pop(), weights.pop(), lengths.pop()
            m1, w1, n1 = means.pop(), weights.pop(), lengths.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            weights.append(wt)
            lengths.append(n1 + n2)
    return np.repeat(means, lengths)


def isotonic_series(cumulative: TimeSeries) -> TimeSeries:
    fitted = isotonic_fit(IsotonicProblem(cumulative.values, np.ones(len(cumulative))))
    return TimeSeries(cumulative.geo_id, cumulative.start, np.maximum(fitted, 0.0))


def daily_from_cumulative(cumulative: TimeSeries) -> TimeSeries:
    """First differences of a monotone cumulative series.

    Day 0 reports 0: there is no prior day to difference against, and the
    opening level already lives in the cumulative series.  Keeping it out
    of the daily series avoids a spurious spike when observation starts
    mid-epidemic.
    """
    vals = np.empty(len(cumulative))
    vals[0] = 0.0
    vals[1:] = np.diff(cumulative.values)
    return TimeSeries(cumulative.geo_id, cumulative.start, np.maximum(vals, 0.0))


@lru_cache(maxsize=4096)
def _local_fit(offsets: tuple[int, ...], degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Hat matrix of the local polynomial fit and its evaluation row at x=0."""
    x = np.asarray(offsets, dtype=float)
    v = np.vander(x, degree + 1, increasing=True)
    pinv = np.linalg.pinv(v)
    return pinv[0], v @ pinv


@lru_cache(maxsize=1024)
def _f_crit(dfn: int, dfd: int) -> float:
    return float(stats.f.ppf(ADPF_CONFIDENCE, dfn, dfd))


def _adpf_point(values: np.ndarray, i: int, half: int, max_degree: int) -> float:
    lo, hi = max(0, i - half), min(values.size, i + half + 1)
    window = values[lo:hi]
    offsets = tuple(range(lo - i, hi - i))
    n = window.size
    cap = max(0, min(max_degree, n - 2))

    def ssr(deg: int) -> float:
        _, hat = _local_fit(offsets, deg)
        resid = window - hat @ window
        return float(resid @ resid)

    accepted = 0
    ssr_acc = ssr(0)
    for deg in range(1, cap + 1):
        dfd = n - deg - 1
        if dfd < 1:
            break
        if ssr_acc <= 1e-18 * max(1.0, float(window @ window)):
            break  # already an essentially perfect fit
        ssr_deg = ssr(deg)
        dfn = deg - accepted
        improvement = (ssr_acc - ssr_deg) / dfn
        scale = ssr_deg / dfd
        if scale <= 0 or improvement / scale > _f_crit(dfn, dfd):
            accepted, ssr_acc = deg, ssr_deg
    row, _ = _local_fit(offsets, accepted)
    return float(row @ window)


def adpf_smooth(daily: TimeSeries, window: int = ADPF_WINDOW,
                max_degree: int = ADPF_MAX_DEGREE) -> TimeSeries:
    """Adaptive-degree polynomial smoothing of a daily series.

    Each point gets a centered window (truncated one-sided at the edges); the
    local polynomial degree is raised while an F-test at 95% confidence says
    the residual reduction is real.  Output is clamped at 0.  Series shorter
    than the window fall back to a degree-0 (moving-average) filter.
    """
    if window < 5 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 5")
    if max_degree > window - 2:
        raise ValueError("max_degree must be <= window - 2")
    values = daily.values
    half = window // 2
    if values.size < window:
        max_degree = 0
    out = np.empty_like(values)
    for i in range(values.size):
        out[i] = _adpf_point(values, i, half, max_degree)
    return TimeSeries(daily.geo_id, daily.start, np.maximum(out, 0.0))


@dataclass(frozen=True)
class Inflection:
    day: int
    kind: str            # "knee" (downturn) or "elbow" (upturn)
    significance: float  # |slope after - slope before| of flanking 7-day fits


@dataclass
class InflectionSet:
    breakpoints: list[Inflection] = field(default_factory=list)

    @property
    def days(self) -> list[int]:
        return [b.day for b in self.breakpoints]

    def to_json(self, start_date: dt.date | None = None) -> list[dict]:
        out = []
        for b in self.breakpoints:
            entry = {"day": b.day, "kind": b.kind, "significance": b.significance}
            if start_date is not None:
                entry["date"] = (start_date + dt.timedelta(days=b.day)).isoformat()
            out.append(entry)
        return out

    @classmethod
    def from_json(cls, entries: list[dict]) -> "InflectionSet":
        return cls([Inflection(int(e["day"]), e["kind"], float(e["significance"]))
                    for e in entries])


def _flank_slope(values: np.ndarray, start: int, stop: int) -> float:
    seg = values[max(0, start):max(0, stop)]
    if seg.size < 2:
        return 0.0
    x = np.arange(seg.size, dtype=float)
    return float(np.polyfit(x, seg, 1)[0])


def _significance(values: np.ndarray, day: int) -> float:
    before = _flank_slope(values, day - 7, day + 1)
    after = _flank_slope(values, day, day + 8)
    return abs(after - before)


def _monotone_after(values: np.ndarray, day: int, direction: int, tol: float) -> bool:
    """Does the series trend in ``direction`` over the validation window?

    Judged on the linear-fit slope so that residual smoothing wiggle does
    not veto a clear trend; ``tol`` (an absolute value change) is the
    adverse drift allowed across the whole window.
    """
    seg = values[day:day + VALIDATE_DAYS + 1]
    if seg.size < MIN_VALIDATE_DAYS + 1:
        return False
    x = np.arange(seg.size, dtype=float)
    slope = float(np.polyfit(x, seg, 1)[0])
    return slope * direction >= -tol / VALIDATE_DAYS


def detect_inflections(smoothed_daily: TimeSeries, sensitivity: float = 1.0,
                       min_prevalence: float = MIN_PREVALENCE) -> InflectionSet:
    """Locate transmission-regime turning points on a smoothed daily series.

    Each sliding 21-day segment is rescaled to the unit square and probed
    twice: as-is for a peak (knee) and vertically mirrored for a trough
    (elbow).  A probe fires when the difference curve against the diagonal
    has an interior local maximum above ``sensitivity`` times the mean
    x-spacing AND the segment's own extremum sits strictly inside it — a
    one-way trend that merely changes speed has its extremum on the edge
    and stays quiet, so smooth growth or decay flanks produce nothing.
    A knee must be followed by a falling 14-day trend, an elbow by a
    rising one, judged on a linear fit with 2%-of-scale leeway.
    Candidates within 7 days merge, highest significance winning.
    Detection starts at the first day whose trailing 7-day mean reaches
    ``min_prevalence`` daily cases.
    """
    values = smoothed_daily.values
    n = values.size
    if n < SEGMENT_DAYS:
        raise ValueError(f"need at least {SEGMENT_DAYS} days, got {n}")
    if sensitivity <= 0:
        raise ValueError("sensitivity must be positive")

    gate = 0
    if min_prevalence > 0:
        trailing = np.convolve(values, np.ones(7) / 7.0, mode="full")[:n]
        trailing[:6] = [values[:i + 1].mean() for i in range(min(6, n))]
        above = np.nonzero(trailing >= min_prevalence)[0]
        if above.size == 0:
            return InflectionSet([])
        gate = int(above[0])

    scale = float(np.max(np.abs(values))) or 1.0
    tol = 0.02 * scale
    threshold = sensitivity / (SEGMENT_DAYS - 1)

    candidates: list[Inflection] = []
    for w in range(gate, n - SEGMENT_DAYS + 1, SEGMENT_STEP):
        seg = values[w:w + SEGMENT_DAYS]
        rng = float(seg.max() - seg.min())
        if rng < tol:        # negligible variation at the series' own scale
            continue
        y_n = (seg - seg.min()) / rng
        x_n = np.linspace(0.0, 1.0, seg.size)
        probes = (("knee", y_n - x_n, int(np.argmax(seg)), -1),
                  ("elbow", 1.0 - y_n - x_n, int(np.argmin(seg)), 1))
        for kind, diff, i_ext, direction in probes:
            if not 0 < i_ext < seg.size - 1:
                continue     # one-way trend, extremum on the edge: no turn
            i = int(np.argmax(diff[2:seg.size - 2])) + 2
            if diff[i] <= threshold:
                continue
            if diff[i] < diff[i - 1] or diff[i] < diff[i + 1]:
                continue     # boundary climb, not an interior extremum
            day = w + i
            if not _monotone_after(values, day, direction, tol):
                continue
            candidates.append(
                Inflection(day, kind, _significance(values, day)))

    candidates.sort(key=lambda c: (c.day, c.kind))
    merged: list[Inflection] = []
    for cand in candidates:
        if merged and cand.day - merged[-1].day < MERGE_GAP_DAYS:
            if cand.significance > merged[-1].significance:
                merged[-1] = cand
        else:
            merged.append(cand)

    validated = []
    for cand in merged:
        direction = -1 if cand.kind == "knee" else 1
        if _monotone_after(values, cand.day, direction, tol):
            validated.append(cand)

    # dropping candidates cannot shrink gaps, but re-check the spacing anyway
    final: list[Inflection] = []
    for cand in validated:
        if final and cand.day - final[-1].day < MERGE_GAP_DAYS:
            if cand.significance > final[-1].significance:
                final[-1] = cand
        else:
            final.append(cand)
    return InflectionSet(final)
