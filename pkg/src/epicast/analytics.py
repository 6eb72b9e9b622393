"""Decision-support metrics derived from fits and forecasts.

Basic reproduction number from the model rates, per-segment effective
reproduction numbers scaled by the susceptible fraction, doubling time of
cumulative cases, and a 1-6 community risk score built from weekly average
incidence per 100K compared against a soft (kappa), hard (lambda), and
flatness (tau) threshold.  Risk is scored on the trailing three weekly
averages and projected forward by sliding the same window into the
forecast one week at a time.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .calibrate import FitResult, Forecast
from .model import DiseaseParams, param_at
from .series import TimeSeries

PER_100K = 1e5


@dataclass(frozen=True)
class RiskThresholds:
    kappa: float = 10.0   # soft threshold, daily cases per 100K
    lam: float = 5.0      # hard threshold
    tau: float = 2.0      # week-over-week flatness threshold

    def __post_init__(self):
        if not (0 < self.tau < self.lam < self.kappa):
            raise ValueError("thresholds must satisfy 0 < tau < lambda < kappa")

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "lambda": self.lam, "tau": self.tau}

    @classmethod
    def from_json(cls, obj: dict) -> "RiskThresholds":
        return cls(kappa=float(obj.get("kappa", 10.0)),
                   lam=float(obj.get("lambda", obj.get("lam", 5.0))),
                   tau=float(obj.get("tau", 2.0)))


@dataclass(frozen=True)
class WeeklyAverages:
    """Trailing and predicted weekly mean daily incidence per 100K.

    a3 is the most recent historical week; p1..p3 are the next three
    forecast weeks in chronological order.
    """

    a1: float
    a2: float
    a3: float
    p1: float
    p2: float
    p3: float

    @property
    def historical(self) -> tuple[float, float, float]:
        return (self.a1, self.a2, self.a3)

    @property
    def predicted(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)


def _first_values(segments) -> float:
    return segments[0][1]


def _eq_r0(beta: float, xi: float, omega: float, alpha: float,
           gamma_a: float, gamma_i: float) -> float:
    if gamma_a <= 0 or alpha <= 0 or gamma_i + omega <= 0:
        raise ValueError("reproduction number undefined for zero rates")
    return (beta / gamma_a) * (1.0 + gamma_a / (gamma_i + omega)
                               - (1.0 - gamma_a / alpha) * xi)


def r0(params: DiseaseParams) -> float:
    """Basic reproduction number from the first fitted segment values."""
    return _eq_r0(_first_values(params.beta_segments),
                  _first_values(params.xi_segments),
                  _first_values(params.omega_segments),
                  params.alpha, params.gamma_a, params.gamma_i)


def r_effective_from_fractions(params: DiseaseParams,
                               s_fractions: list[tuple[float, float]]
                               ) -> list[tuple[float, float]]:
    """(segment start day, R_eff) given susceptible fractions S(t_k)/N."""
    out = []
    for t_k, frac in s_fractions:
        value = _eq_r0(param_at(params.beta_segments, t_k),
                       param_at(params.xi_segments, t_k),
                       param_at(params.omega_segments, t_k),
                       params.alpha, params.gamma_a, params.gamma_i)
        out.append((t_k, value * frac))
    return out


def r_effective(params: DiseaseParams, trajectory) -> list[tuple[float, float]]:
    """Per-segment effective reproduction number along a trajectory."""
    s = trajectory.column("S")
    t = trajectory.t
    fractions = []
    for t_k, _ in params.beta_segments:
        if t_k < t[0] or t_k > t[-1]:
            raise ValueError(f"trajectory does not cover segment start {t_k}")
        fractions.append((t_k, float(np.interp(t_k, t, s)) / params.N))
    return r_effective_from_fractions(params, fractions)


def growth_rate(series: TimeSeries, window: int = 14) -> float:
    """Exponential growth rate of cumulative counts over the trailing window."""
    v = series.values
    if window < 1 or v.size < window + 1:
        raise ValueError("series shorter than the requested window")
    n0, n1 = float(v[-1 - window]), float(v[-1])
    if n0 <= 0 or n1 <= 0:
        raise ValueError("growth rate needs positive counts at both ends")
    return math.log(n1 / n0) / window


def doubling_time(series: TimeSeries, window: int = 14) -> float:
    """ln 2 over the trailing growth rate; +inf when not growing."""
    rate = growth_rate(series, window)
    if rate <= 0:
        return math.inf
    return math.log(2.0) / rate


def weekly_averages(hist_daily_per100k, forecast_daily_per100k) -> WeeklyAverages:
    """Split the trailing 21 historical days and the first 21 forecast days
    into weekly means (a3 = most recent history, p1 = first forecast week)."""
    hist = np.asarray(hist_daily_per100k, dtype=float)
    pred = np.asarray(forecast_daily_per100k, dtype=float)
    if hist.size < 21:
        raise ValueError("need at least 21 trailing historical days")
    if pred.size < 21:
        raise ValueError("need at least 21 forecast days")
    h = hist[-21:]
    a1, a2, a3 = (float(h[i * 7:(i + 1) * 7].mean()) for i in range(3))
    p = pred[:21]
    p1, p2, p3 = (float(p[i * 7:(i + 1) * 7].mean()) for i in range(3))
    return WeeklyAverages(a1, a2, a3, p1, p2, p3)


def risk_score(averages: tuple[float, float, float],
               thresholds: RiskThresholds | None = None) -> int:
    """Community risk on a 1 (safest) to 6 scale from three weekly averages.

    ``averages`` is (a1, a2, a3) with a3 the most recent week.  Below the
    soft threshold the trend decides between 1-3 (a flat-then-down shape
    still earns a 1); above it only strict trends move the score off 5.
    """
    th = thresholds or RiskThresholds()
    a1, a2, a3 = (float(a) for a in averages)
    if min(a1, a2, a3) < 0:
        raise ValueError("weekly averages must be non-negative")
    strict_decr = a3 < a2 and a2 < a1
    strict_incr = a3 > a2 and a2 > a1
    if a1 < th.kappa and a2 < th.kappa and a3 < th.kappa:
        if a2 < th.lam and a3 < th.lam:
            flat = (abs(a3 - a2) <= th.tau and abs(a2 - a1) <= th.tau
                    and abs(a3 - a1) <= th.tau)
            flat_decr = abs(a2 - a1) <= th.tau and a3 < a2
            return 1 if (flat or strict_decr or flat_decr) else 2
        if strict_decr:
            return 2
        return 3
    if strict_decr:
        return 4
    if strict_incr:
        return 6
    return 5


def projected_risk_scores(wa: WeeklyAverages,
                          thresholds: RiskThresholds | None = None) -> list[int]:
    """Risk for the next three weeks, sliding the 3-week window one week at
    a time into the forecast so each score keeps 21 days of context."""
    windows = [(wa.a2, wa.a3, wa.p1),
               (wa.a3, wa.p1, wa.p2),
               (wa.p1, wa.p2, wa.p3)]
    return [risk_score(w, thresholds) for w in windows]


@dataclass
class AnalyticsReport:
    geo_id: str
    r0: float
    r_eff: list[tuple[float, float]]     # (segment start day, value)
    r_t: float
    growth_rate: float | None
    doubling_time: float                  # +inf means "not doubling"
    current_risk: int
    projected_risks: list[int]
    thresholds: RiskThresholds
    start: dt.date                        # date of model day 0

    def to_json(self) -> dict:
        finite_double = self.doubling_time if math.isfinite(self.doubling_time) else None
        return {
            "geo_id": self.geo_id,
            "r0": self.r0,
            "r_eff": [{"t": t,
                       "date": (self.start + dt.timedelta(days=round(t))).isoformat(),
                       "value": v} for t, v in self.r_eff],
            "r_t": self.r_t,
            "growth_rate": self.growth_rate,
            "doubling_time": finite_double,
            "not_doubling": not math.isfinite(self.doubling_time),
            "current_risk": self.current_risk,
            "projected_risks": list(self.projected_risks),
            "thresholds": self.thresholds.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict, start: dt.date | None = None) -> "AnalyticsReport":
        r_eff = [(float(e["t"]), float(e["value"])) for e in obj["r_eff"]]
        if start is None:
            first = obj["r_eff"][0]["date"] if obj["r_eff"] else None
            start = dt.date.fromisoformat(first) if first else dt.date(2020, 1, 1)
        dbl = obj.get("doubling_time")
        return cls(
            geo_id=obj["geo_id"], r0=float(obj["r0"]), r_eff=r_eff,
            r_t=float(obj["r_t"]), growth_rate=obj.get("growth_rate"),
            doubling_time=math.inf if dbl is None else float(dbl),
            current_risk=int(obj["current_risk"]),
            projected_risks=[int(r) for r in obj["projected_risks"]],
            thresholds=RiskThresholds.from_json(obj["thresholds"]),
            start=start)


def build_report(fit: FitResult | None, fcast: Forecast, cum_cases: TimeSeries,
                 population: float,
                 thresholds: RiskThresholds | None = None) -> AnalyticsReport:
    """Assemble the full per-geo-unit analytics payload.

    Trend metrics use the observed cumulative series; risk scores convert
    observed and forecast daily cases to per-100K weekly averages.  The
    susceptible fractions for R-effective come from the fit trajectory when
    available, otherwise from the fractions stored on the forecast.
    """
    th = thresholds or RiskThresholds()
    params = fcast.params
    base_r0 = r0(params)
    if fit is not None and fit.trajectory is not None:
        r_eff = r_effective(params, fit.trajectory)
    else:
        r_eff = r_effective_from_fractions(params, fcast.s_fractions)
    r_t = r_eff[-1][1]

    try:
        rate = growth_rate(cum_cases, 14)
        dbl = math.inf if rate <= 0 else math.log(2.0) / rate
    except ValueError:
        rate, dbl = None, math.inf

    scale = PER_100K / population
    hist_daily = np.diff(cum_cases.values, prepend=cum_cases.values[0]) * scale
    future_daily = fcast.daily.central[fcast.train_days:] * scale
    wa = weekly_averages(hist_daily, future_daily)
    return AnalyticsReport(
        geo_id=fcast.geo_id, r0=base_r0, r_eff=r_eff, r_t=r_t,
        growth_rate=rate, doubling_time=dbl,
        current_risk=risk_score(wa.historical, th),
        projected_risks=projected_risk_scores(wa, th),
        thresholds=th, start=fcast.start)
