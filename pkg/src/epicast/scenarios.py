"""What-if mobility scenarios and the hospital demand add-on.

A scenario rescales the observed mobility index by a percentage from a
chosen date onward, rebuilds the mobility-change curve from the spliced
index with the same construction used for the base fit, and re-integrates
the fitted model untouched.  A 0% adjustment therefore reproduces the base
forecast exactly; the splice only acts where mobility was actually
observed (there is nothing to scale beyond the data).

Hospital and ICU demand follow a linear chain forced by predicted daily
incidence: a share eta_h of new cases enters a hospital census pool H that
drains by discharge (gamma_h) or ICU transfer (eta_u); the ICU pool U
drains by discharge (gamma_u) or death (mu_h).  Because H and U census
alone cannot separate ICU discharge from ICU death (only their sum is
observable), gamma_u stays fixed during fitting.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares
from scipy.special import expit, logit
from scipy.stats import qmc

from .calibrate import _LSODA_LOCK, Band, FitResult, Forecast, forecast, nrmse
from .model import build_mobility_curve
from .series import TimeSeries

GAMMA_U_DEFAULT = 0.1    # ICU discharge rate when held fixed (10-day stay)
HOSP_BOUNDS = {
    "eta_h": (0.0, 1.0),
    "gamma_h": (1.0 / 30.0, 1.0),
    "eta_u": (0.0, 0.5),
    "mu_h": (0.0, 0.5),
}
MIN_HOSP_OVERLAP = 21


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    geo_id: str
    adjust_percent: float          # -100 .. +100
    from_date: dt.date
    horizon: int
    label: str = ""

    def __post_init__(self):
        if not -100.0 <= self.adjust_percent <= 100.0:
            raise ScenarioError("mobility adjustment must be within [-100, 100]%")
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least 1 day")

    def to_json(self) -> dict:
        return {"geo_id": self.geo_id, "adjust": self.adjust_percent,
                "from": self.from_date.isoformat(), "horizon": self.horizon,
                "label": self.label}

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioSpec":
        try:
            return cls(geo_id=str(obj["geo_id"]),
                       adjust_percent=float(obj["adjust"]),
                       from_date=dt.date.fromisoformat(str(obj["from"])),
                       horizon=int(obj["horizon"]),
                       label=str(obj.get("label", "")))
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario spec: {exc}") from exc


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    base: Forecast
    scenario: Forecast

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "base": self.base.to_json(),
                "scenario": self.scenario.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioResult":
        return cls(spec=ScenarioSpec.from_json(obj["spec"]),
                   base=Forecast.from_json(obj["base"]),
                   scenario=Forecast.from_json(obj["scenario"]))


def splice_mobility(index: TimeSeries, from_date: dt.date,
                    adjust_percent: float) -> TimeSeries:
    """Scale the index by (1 + adjust/100) from ``from_date`` onward.

    Only observed days change; a date past the end of the data leaves the
    series untouched (the extrapolated future has no values to scale).
    """
    factor = 1.0 + adjust_percent / 100.0
    values = index.values.copy()
    start_off = (from_date - index.start).days
    if start_off < len(values):
        values[max(0, start_off):] *= factor
    return TimeSeries(index.geo_id, index.start, values)


def run_scenario(spec: ScenarioSpec, fits: list[FitResult],
                 mobility_index: TimeSeries | None) -> ScenarioResult:
    """Re-run the fitted model under adjusted mobility; parameters unchanged."""
    if not fits:
        raise ScenarioError("no fit available for scenario")
    best = min(fits, key=lambda f: f.loss)
    if mobility_index is None:
        raise ScenarioError(
            "scenario requires a fit with an embedded mobility index")
    train_end = best.start + dt.timedelta(days=best.train_days - 1)
    lo = train_end - dt.timedelta(days=7)
    hi = train_end + dt.timedelta(days=spec.horizon)
    if not lo <= spec.from_date <= hi:
        raise ScenarioError(
            f"adjustment date must fall in [{lo.isoformat()}, {hi.isoformat()}]")

    base_curve = build_mobility_curve(mobility_index).aligned_to(best.start)
    base = forecast(fits, spec.horizon, base_curve)
    spliced = splice_mobility(mobility_index, spec.from_date, spec.adjust_percent)
    scen_curve = build_mobility_curve(spliced).aligned_to(best.start)
    scenario = forecast(fits, spec.horizon, scen_curve)
    return ScenarioResult(spec=spec, base=base, scenario=scenario)


def run_scenario_from_artifact(spec: ScenarioSpec, artifact: dict) -> ScenarioResult:
    from .calibrate import artifact_to_fits
    fits, _ = artifact_to_fits(artifact)
    index = None
    if artifact.get("mobility_index"):
        index = TimeSeries.from_json(artifact["mobility_index"])
    return run_scenario(spec, fits, index)


@dataclass(frozen=True)
class HospParams:
    eta_h: float     # share of daily incidence admitted, per day
    gamma_h: float   # hospital discharge rate
    eta_u: float     # ICU transfer rate from the hospital pool
    gamma_u: float   # ICU discharge rate
    mu_h: float      # in-ICU death rate

    def __post_init__(self):
        for name in ("eta_h", "gamma_h", "eta_u", "gamma_u", "mu_h"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_json(self) -> dict:
        return {"eta_h": self.eta_h, "gamma_h": self.gamma_h,
                "eta_u": self.eta_u, "gamma_u": self.gamma_u,
                "mu_h": self.mu_h}

    @classmethod
    def from_json(cls, obj: dict) -> "HospParams":
        return cls(**{k: float(obj[k])
                      for k in ("eta_h", "gamma_h", "eta_u", "gamma_u", "mu_h")})


def integrate_hosp(params: HospParams, incidence, h0: float = 0.0,
                   u0: float = 0.0, d0: float = 0.0,
                   rtol: float = 1e-8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hospital census H, ICU census U, and chain deaths D' on daily steps,
    forced by linear interpolation of the given daily incidence."""
    inc = np.asarray(incidence, dtype=float)
    if inc.ndim != 1 or inc.size < 2:
        raise ValueError("incidence must cover at least 2 days")
    days = np.arange(inc.size, dtype=float)
    out_h = params.gamma_h + params.eta_u
    out_u = params.gamma_u + params.mu_h

    def rhs(t, y):
        h, u, _ = y
        inflow = params.eta_h * float(np.interp(t, days, inc))
        return [inflow - out_h * h,
                params.eta_u * h - out_u * u,
                params.mu_h * u]

    atol = 1e-9 * max(1.0, float(inc.max()), h0, u0)
    with _LSODA_LOCK:
        sol = solve_ivp(rhs, (0.0, days[-1]), [h0, u0, d0], method="LSODA",
                        t_eval=days, rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise RuntimeError(f"hospital chain integration failed: {sol.message}")
    return sol.y[0], sol.y[1], sol.y[2]


@dataclass
class HospFit:
    params: HospParams
    loss: float
    nrmse_hosp: float
    nrmse_icu: float
    overlap_days: int
    start: dt.date


def fit_hosp(incidence_pred: TimeSeries, hosp_census: TimeSeries,
             icu_census: TimeSeries, gamma_u: float = GAMMA_U_DEFAULT,
             starts: int = 8, seed: int = 0) -> HospFit:
    """Learn admission, discharge, transfer, and death rates from census data.

    Damped least squares on the stacked hospital and ICU census NRMSE
    residuals, multi-start over logistic-bounded rates.  The initial pools
    equal the first observed census values.
    """
    first = max(incidence_pred.start, hosp_census.start, icu_census.start)
    last = min(incidence_pred.end, hosp_census.end, icu_census.end)
    n = (last - first).days + 1
    if n < MIN_HOSP_OVERLAP:
        raise ValueError(
            f"need >= {MIN_HOSP_OVERLAP} overlapping days, got {max(n, 0)}")

    def window(series: TimeSeries) -> np.ndarray:
        off = (first - series.start).days
        return series.values[off:off + n]

    inc = window(incidence_pred)
    h_obs = window(hosp_census)
    u_obs = window(icu_census)
    h0, u0 = float(h_obs[0]), float(u_obs[0])

    names = list(HOSP_BOUNDS)
    lo = np.array([HOSP_BOUNDS[k][0] for k in names])
    hi = np.array([HOSP_BOUNDS[k][1] for k in names])

    def unpack(z: np.ndarray) -> HospParams:
        p = lo + (hi - lo) * expit(z)
        return HospParams(eta_h=p[0], gamma_h=p[1], eta_u=p[2],
                          gamma_u=gamma_u, mu_h=p[3])

    def scale_of(obs: np.ndarray) -> float:
        rng = float(obs.max() - obs.min())
        if rng == 0.0:
            rng = max(abs(float(obs[0])), 1.0)
        return 1.0 / (rng * np.sqrt(obs.size))

    s_h, s_u = scale_of(h_obs), scale_of(u_obs)

    def residuals(z: np.ndarray) -> np.ndarray:
        try:
            h, u, _ = integrate_hosp(unpack(z), inc, h0=h0, u0=u0)
        except RuntimeError:
            return np.full(2 * n, 1e3)
        return np.concatenate([s_h * (h - h_obs), s_u * (u - u_obs)])

    sampler = qmc.LatinHypercube(d=len(names), seed=seed)
    z_starts = logit(np.clip(sampler.random(starts), 1e-3, 1 - 1e-3))
    best_z, best_cost = None, np.inf
    for z0 in z_starts:
        sol = least_squares(residuals, z0, method="lm", diff_step=1e-6,
                            ftol=1e-10, xtol=1e-10, max_nfev=400)
        if sol.cost < best_cost:
            best_z, best_cost = sol.x, sol.cost
    params = unpack(best_z)
    h, u, _ = integrate_hosp(params, inc, h0=h0, u0=u0)
    n_h, n_u = nrmse(h, h_obs), nrmse(u, u_obs)
    return HospFit(params=params, loss=n_h + n_u, nrmse_hosp=n_h,
                   nrmse_icu=n_u, overlap_days=n, start=first)


@dataclass
class HospProjection:
    geo_id: str
    start: dt.date
    hosp: Band
    icu: Band
    chain_deaths: Band

    def to_json(self) -> dict:
        n = self.hosp.central.size
        dates = [(self.start + dt.timedelta(days=i)).isoformat()
                 for i in range(n)]
        return {"geo_id": self.geo_id, "dates": dates,
                "hosp_census": self.hosp.to_json(),
                "icu_census": self.icu.to_json(),
                "chain_deaths": self.chain_deaths.to_json()}


def project_hosp(params: HospParams, fcast: Forecast, h0: float = 0.0,
                 u0: float = 0.0) -> HospProjection:
    """Drive the hospital chain with the forecast incidence band.

    The chain is linear and monotone in its forcing, so feeding the lower
    and upper incidence series yields valid census bounds elementwise.
    """
    runs = {}
    for key, inc in (("central", fcast.daily.central),
                     ("lower", fcast.daily.lower),
                     ("upper", fcast.daily.upper)):
        runs[key] = integrate_hosp(params, inc, h0=h0, u0=u0)

    def band(i: int) -> Band:
        c, lo, hi = runs["central"][i], runs["lower"][i], runs["upper"][i]
        return Band(c, np.minimum(lo, c), np.maximum(hi, c))

    return HospProjection(geo_id=fcast.geo_id, start=fcast.start,
                          hosp=band(0), icu=band(1), chain_deaths=band(2))
