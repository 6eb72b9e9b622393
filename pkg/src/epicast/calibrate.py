"""Trajectory integration, parameter estimation, and forecasting.

Integration uses LSODA (automatic stiff/non-stiff switching) restarted at
each parameter-segment boundary so trajectories stay differentiable in the
breakpoint times.  A ninth auxiliary state accumulates the confirmation
flux alpha*C, giving exact daily-case increments between integer days.

Fitting minimizes a weighted sum of three normalized RMSEs (daily cases,
cumulative cases, cumulative deaths) by damped least squares
(Levenberg-Marquardt) over logistic-transformed bounded parameters, from
Latin-hypercube starting points.  Breakpoint times are fit parameters
constrained near their detected estimates.  Forecast interval bounds come
from the dispersion of the top-ranked fits.

The LSODA entry point is guarded by a module lock: the underlying Fortran
code keeps global state and is not reentrant.  Everything else is pure, so
many geo-units can be fitted concurrently from a bounded worker pool.
"""
from __future__ import annotations

import datetime as dt
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares
from scipy.special import expit, logit
from scipy.stats import qmc

from .model import (CompartmentState, DiseaseParams, InfeasibleSeedError,
                    MobilityCurve, flat_curve, initial_state)
from .series import TimeSeries

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)   # (daily cases, cumulative cases, cumulative deaths)
FIT_RTOL = 1e-8                      # tighter than the public default so finite
FIT_ATOL_FACTOR = 1e-10              # differences of the residuals stay clean
DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "beta": (0.01, 2.0),
    "xi": (0.05, 0.95),
    "alpha": (1.0 / 14.0, 1.0),
    "gamma_a": (1.0 / 21.0, 0.25),
    "gamma_i": (1.0 / 21.0, 0.25),
    "gamma_w": (1.0 / 30.0, 0.2),
    "omega": (0.0, 0.2),
    "mu_d": (0.0, 0.5),
}
MIN_TRAIN_DAYS = 28
_WALL = 1e3          # residual value substituted when integration fails
_LSODA_LOCK = threading.Lock()


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_t: float = 0.0):
        super().__init__(message)
        self.last_t = last_t


class FitFailureError(RuntimeError):
    def __init__(self, diagnostics: list[dict]):
        super().__init__("all fit starts failed")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Trajectory:
    """Model states on a time grid plus the cumulative confirmation flux."""

    t: np.ndarray          # model days
    states: np.ndarray     # (n, 8) in model.STATE_ORDER
    flux_cum: np.ndarray   # (n,) integral of alpha*C from 0 to t

    def column(self, name: str) -> np.ndarray:
        from .model import STATE_ORDER
        return self.states[:, STATE_ORDER.index(name)]

    def state_at(self, i: int) -> CompartmentState:
        return CompartmentState.from_array(self.states[i])


def _make_rhs(params: DiseaseParams, beta: float, xi: float, omega: float,
              mu_d: float, curve: MobilityCurve):
    n_pop = params.N
    alpha, ga, gi, gw, rho = (params.alpha, params.gamma_a, params.gamma_i,
                              params.gamma_w, params.rho)
    cdays, cg, ctail = curve.days, curve.g, curve.tail
    cfirst, clast, cg0 = float(cdays[0]), float(cdays[-1]), float(cg[0])
    coupled = bool(np.any(cg != 0.0) or ctail != 0.0)

    def rhs(t, y):
        s, yy, a, c, i, w, r, _, _ = y
        lam = beta * s * (i + a + c) / n_pop
        conf = alpha * c
        if coupled:
            if t > clast:
                f = ctail
            elif t <= cfirst:
                f = cg0
            else:
                f = float(np.interp(t, cdays, cg))
            pool = s + yy
            flow_ys = min(yy, f * pool) if f > 0.0 else 0.0
            flow_sy = min(s, -f * pool) if f < 0.0 else 0.0
        else:
            flow_ys = flow_sy = 0.0
        rec_a = ga * a
        rec_i = gi * i
        rec_w = gw * w
        worsen = omega * i
        die = mu_d * w
        wane = rho * r
        return [
            -lam + wane + flow_ys - flow_sy,
            flow_sy - flow_ys,
            (1.0 - xi) * lam - rec_a,
            xi * lam - conf,
            conf - rec_i - worsen,
            worsen - die - rec_w,
            rec_i + rec_a + rec_w - wane,
            die,
            conf,
        ]

    return rhs


def integrate(initial: CompartmentState, params: DiseaseParams,
              curve: MobilityCurve | None, t_grid, rtol: float = 1e-6,
              atol: float | None = None) -> Trajectory:
    """Solve the model ODEs on ``t_grid`` (days, increasing, starting at 0).

    The integration restarts at every parameter-segment boundary, so the
    piecewise-constant rates are exact within each sub-interval.  A ``None``
    curve means no commuting coupling (both transfer rates zero).
    """
    if curve is None:
        curve = flat_curve()
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("t_grid must be a non-empty vector")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be increasing and start at 0")
    if atol is None:
        atol = 1e-8 * params.N

    t_end = float(grid[-1])
    knots = sorted({t for segs in (params.beta_segments, params.xi_segments,
                                   params.omega_segments, params.mu_segments)
                    for t, _ in segs if 0.0 < t < t_end})
    edges = [0.0] + knots + [t_end]

    from .model import param_at
    y = np.append(initial.as_array(), 0.0)
    out = np.empty((grid.size, 9))
    out[0] = y
    cursor = 1  # grid[0] == 0 handled above
    for a, b in zip(edges, edges[1:]):
        mid = 0.5 * (a + b)
        rhs = _make_rhs(params,
                        param_at(params.beta_segments, mid),
                        param_at(params.xi_segments, mid),
                        param_at(params.omega_segments, mid),
                        param_at(params.mu_segments, mid),
                        curve)
        mask = (grid > a) & (grid <= b)
        pts = grid[mask]
        t_eval = pts if pts.size and pts[-1] == b else np.append(pts, b)
        with _LSODA_LOCK:
            sol = solve_ivp(rhs, (a, b), y, method="LSODA", t_eval=t_eval,
                            rtol=rtol, atol=atol)
        if not sol.success or not np.all(np.isfinite(sol.y)):
            last = float(sol.t[-1]) if sol.t.size else a
            raise IntegrationError(f"integration failed near t={last:.2f}: "
                                   f"{sol.message}", last_t=last)
        take = pts.size
        out[cursor:cursor + take] = sol.y[:, :take].T
        cursor += take
        y = sol.y[:, -1]
    return Trajectory(grid, out[:, :8], out[:, 8])


def nrmse(pred, obs) -> float:
    """RMSE normalized by the observed range (max(|obs|, 1) when constant)."""
    pred = np.asarray(pred, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if pred.shape != obs.shape or obs.size < 1:
        raise ValueError("pred and obs must be matching non-empty vectors")
    rmse = float(np.sqrt(np.mean((pred - obs) ** 2)))
    rng = float(obs.max() - obs.min())
    if rng == 0.0:
        rng = max(abs(float(obs[0])), 1.0)
    return rmse / rng


def mape(pred, obs, eps: float = 1e-9) -> float:
    pred = np.asarray(pred, dtype=float)
    obs = np.asarray(obs, dtype=float)
    return float(np.mean(np.abs(pred - obs) / np.maximum(np.abs(obs), eps)))


def predict_observables(params: DiseaseParams, initial: CompartmentState,
                        curve: MobilityCurve | None, days, cum_offset: float = 0.0,
                        rtol: float = 1e-6, atol: float | None = None) -> dict:
    """Daily cases, cumulative cases, and cumulative deaths on integer days.

    Daily cases on day k are the confirmation flux integrated over
    (k-1, k]; day 0 has no flux and reports 0.  Cumulative cases are the
    flux integral shifted by ``cum_offset`` (the observed count at t0).
    """
    traj = integrate(initial, params, curve, days, rtol=rtol, atol=atol)
    daily = np.empty_like(traj.flux_cum)
    daily[0] = 0.0
    daily[1:] = np.diff(traj.flux_cum)
    return {
        "daily": daily,
        "cum": cum_offset + traj.flux_cum,
        "deaths": traj.column("D"),
        "trajectory": traj,
    }


@dataclass(frozen=True)
class ObservedArrays:
    """Training targets on the model day grid 0..T-1."""

    cum: np.ndarray
    daily: np.ndarray
    deaths: np.ndarray | None = None

    def __post_init__(self):
        cum = np.asarray(self.cum, dtype=float)
        daily = np.asarray(self.daily, dtype=float)
        if cum.shape != daily.shape or cum.size < 2:
            raise ValueError("cum and daily must match and have >= 2 days")
        object.__setattr__(self, "cum", cum)
        object.__setattr__(self, "daily", daily)
        if self.deaths is not None:
            deaths = np.asarray(self.deaths, dtype=float)
            if deaths.shape != cum.shape:
                raise ValueError("deaths must match the case grid")
            object.__setattr__(self, "deaths", deaths)


def loss(params: DiseaseParams, initial: CompartmentState,
         curve: MobilityCurve | None, observed: ObservedArrays,
         weights=DEFAULT_WEIGHTS,
         rtol: float = 1e-6, atol: float | None = None) -> float:
    """Weighted NRMSE loss; +inf when the candidate cannot be integrated.

    Daily cases are compared from day 1 on (day 0 carries the opening
    cumulative count, not a model flux); deaths contribute only when a
    death series is present.
    """
    days = np.arange(observed.cum.size, dtype=float)
    cum_offset = float(observed.cum[0])
    try:
        pred = predict_observables(params, initial, curve, days,
                                   cum_offset=cum_offset, rtol=rtol, atol=atol)
    except IntegrationError:
        return float("inf")
    w_daily, w_cum, w_death = weights
    total = w_daily * nrmse(pred["daily"][1:], observed.daily[1:])
    total += w_cum * nrmse(pred["cum"], observed.cum)
    if observed.deaths is not None and w_death > 0:
        total += w_death * nrmse(pred["deaths"], observed.deaths)
    return float(total)


@dataclass(frozen=True)
class FitConfig:
    initializer_count: int = 20
    breakpoint_slack: float = 7.0
    max_iterations: int = 60
    ftol: float = 1e-9
    xtol: float = 1e-9
    gtol: float = 1e-9
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_BOUNDS))
    seed: int = 0
    top_k: int = 5
    loss_ratio: float = 1.5

    def __post_init__(self):
        if self.initializer_count < 1:
            raise ValueError("initializer_count must be >= 1")
        merged = dict(DEFAULT_BOUNDS)
        merged.update(self.bounds)
        for name, (lo, hi) in merged.items():
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name} must be finite with lo < hi")
        object.__setattr__(self, "bounds", merged)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def to_json(self) -> dict:
        return {
            "initializer_count": self.initializer_count,
            "breakpoint_slack": self.breakpoint_slack,
            "max_iterations": self.max_iterations,
            "ftol": self.ftol, "xtol": self.xtol, "gtol": self.gtol,
            "weights": list(self.weights),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "seed": self.seed,
            "top_k": self.top_k,
            "loss_ratio": self.loss_ratio,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FitConfig":
        kwargs = dict(obj)
        if "weights" in kwargs:
            kwargs["weights"] = tuple(kwargs["weights"])
        if "bounds" in kwargs:
            kwargs["bounds"] = {k: (float(lo), float(hi))
                                for k, (lo, hi) in kwargs["bounds"].items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class FitData:
    """A single geo-unit's training inputs."""

    geo_id: str
    cases: TimeSeries                 # cumulative, already made monotone
    deaths: TimeSeries | None
    population: float
    t0: int = 0
    train_days: int | None = None

    def __post_init__(self):
        if self.population <= 0:
            raise ValueError("population must be positive")
        if not 0 <= self.t0 < len(self.cases):
            raise ValueError("t0 outside the case series")

    @property
    def n_train(self) -> int:
        avail = len(self.cases) - self.t0
        return avail if self.train_days is None else min(self.train_days, avail)

    @property
    def start(self) -> dt.date:
        return self.cases.start + dt.timedelta(days=self.t0)

    def observed(self) -> ObservedArrays:
        t = self.n_train
        cum = self.cases.values[self.t0:self.t0 + t].copy()
        daily = np.empty_like(cum)
        daily[0] = 0.0        # matches the model: no flux before day 0
        daily[1:] = np.diff(cum)
        deaths = None
        if self.deaths is not None:
            first, last = self.start, self.start + dt.timedelta(days=t - 1)
            if self.deaths.start <= first and self.deaths.end >= last:
                off = (first - self.deaths.start).days
                deaths = self.deaths.values[off:off + t].copy()
        return ObservedArrays(cum, daily, deaths)


@dataclass
class FitResult:
    geo_id: str
    start: dt.date
    train_days: int
    population: float
    params: DiseaseParams
    breakpoints: list[float]
    loss: float
    nrmse: dict[str, float]
    initial: CompartmentState
    cum_offset: float
    trajectory: Trajectory | None
    diagnostics: dict
    rank: int = 0


def _breakpoint_windows(estimates: list[float], slack: float,
                        n_train: int) -> list[tuple[float, float, float]]:
    """(estimate, lo, hi) per breakpoint; windows clipped to stay ordered."""
    windows = []
    for i, est in enumerate(estimates):
        lo = max(est - slack, 2.0)
        hi = min(est + slack, n_train - 3.0)
        if i > 0:
            lo = max(lo, 0.5 * (estimates[i - 1] + est) + 0.5)
        if i < len(estimates) - 1:
            hi = min(hi, 0.5 * (est + estimates[i + 1]) - 0.5)
        if hi - lo < 0.2:    # crowded estimates: pin near the estimate
            lo, hi = est - 0.1, est + 0.1
        windows.append((est, lo, hi))
    return windows


class FitProblem:
    """Residual function and parameter packing for one geo-unit fit.

    Vector layout: [beta_0..beta_{K-1}, xi_0.., omega_0.., mu_0..,
    alpha, gamma_a, gamma_i, gamma_w, bp_1..bp_{K-1}] where K is the
    number of parameter segments.  All entries live in an unbounded space
    and map into their bounds through a logistic transform.
    """

    def __init__(self, data: FitData, breakpoint_estimates: list[float],
                 config: FitConfig, curve: MobilityCurve | None = None):
        if data.n_train < MIN_TRAIN_DAYS:
            raise ValueError(
                f"training window must cover >= {MIN_TRAIN_DAYS} days, "
                f"got {data.n_train}")
        self.data = data
        self.config = config
        self.curve = curve if curve is not None else flat_curve(data.start)
        self.observed = data.observed()
        ests = sorted(e for e in breakpoint_estimates
                      if 5.0 <= e <= data.n_train - 6.0)
        self.bp_windows = _breakpoint_windows(ests, config.breakpoint_slack,
                                              data.n_train)
        self.n_segments = len(self.bp_windows) + 1
        b = config.bounds
        lo, hi = [], []
        for name in ("beta", "xi", "omega", "mu_d"):
            lo += [b[name][0]] * self.n_segments
            hi += [b[name][1]] * self.n_segments
        for name in ("alpha", "gamma_a", "gamma_i", "gamma_w"):
            lo.append(b[name][0])
            hi.append(b[name][1])
        for _, wlo, whi in self.bp_windows:
            lo.append(wlo)
            hi.append(whi)
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.n_params = self.lo.size
        obs = self.observed
        self._blocks: list[tuple[str, np.ndarray, float]] = []
        w_daily, w_cum, w_death = config.weights
        self._add_block("daily", obs.daily[1:], w_daily)
        self._add_block("cum", obs.cum, w_cum)
        if obs.deaths is not None:
            self._add_block("deaths", obs.deaths, w_death)
        self.n_residuals = sum(b[1].size for b in self._blocks)

    def _add_block(self, name: str, obs: np.ndarray, weight: float):
        if weight <= 0 or obs.size == 0:
            return
        rng = float(obs.max() - obs.min())
        if rng == 0.0:
            rng = max(abs(float(obs[0])), 1.0)
        scale = np.sqrt(weight) / (rng * np.sqrt(obs.size))
        self._blocks.append((name, obs, scale))

    def unpack(self, z: np.ndarray) -> DiseaseParams:
        p = self.lo + (self.hi - self.lo) * expit(np.asarray(z, dtype=float))
        k = self.n_segments
        beta, xi, omega, mu = (p[0:k], p[k:2 * k], p[2 * k:3 * k], p[3 * k:4 * k])
        alpha, ga, gi, gw = p[4 * k:4 * k + 4]
        bps = p[4 * k + 4:]
        starts = np.concatenate(([0.0], np.sort(bps)))
        seg = lambda vals: tuple(zip(starts, vals))
        return DiseaseParams(
            N=self.data.population,
            beta_segments=seg(beta), xi_segments=seg(xi),
            omega_segments=seg(omega), mu_segments=seg(mu),
            alpha=float(alpha), gamma_a=float(ga), gamma_i=float(gi),
            gamma_w=float(gw))

    def pack(self, params: DiseaseParams) -> np.ndarray:
        k = self.n_segments
        vals = ([v for _, v in params.beta_segments]
                + [v for _, v in params.xi_segments]
                + [v for _, v in params.omega_segments]
                + [v for _, v in params.mu_segments]
                + [params.alpha, params.gamma_a, params.gamma_i, params.gamma_w]
                + [t for t, _ in params.beta_segments[1:]])
        p = np.asarray(vals, dtype=float)
        u = np.clip((p - self.lo) / (self.hi - self.lo), 1e-6, 1.0 - 1e-6)
        return logit(u)

    def _predict(self, params: DiseaseParams) -> dict:
        initial = initial_state(self.data.cases, self.data.deaths, params,
                                self.data.t0)
        days = np.arange(self.data.n_train, dtype=float)
        return predict_observables(params, initial, self.curve, days,
                                   cum_offset=float(self.observed.cum[0]),
                                   rtol=FIT_RTOL,
                                   atol=FIT_ATOL_FACTOR * params.N)

    def residuals(self, z: np.ndarray) -> np.ndarray:
        try:
            params = self.unpack(z)
            pred = self._predict(params)
        except (IntegrationError, InfeasibleSeedError, ValueError):
            return np.full(self.n_residuals, _WALL)
        out = []
        for name, obs, scale in self._blocks:
            series = pred[name][1:] if name == "daily" else pred[name]
            out.append(scale * (series - obs))
        res = np.concatenate(out)
        if not np.all(np.isfinite(res)):
            return np.full(self.n_residuals, _WALL)
        return res

    def evaluate(self, z: np.ndarray):
        """(loss, per-target nrmse, initial, trajectory) at z; inf on failure."""
        try:
            params = self.unpack(z)
            initial = initial_state(self.data.cases, self.data.deaths, params,
                                    self.data.t0)
            days = np.arange(self.data.n_train, dtype=float)
            pred = predict_observables(params, initial, self.curve, days,
                                       cum_offset=float(self.observed.cum[0]),
                                       rtol=FIT_RTOL,
                                       atol=FIT_ATOL_FACTOR * params.N)
        except (IntegrationError, InfeasibleSeedError, ValueError):
            return float("inf"), {}, None, None
        obs = self.observed
        w_daily, w_cum, w_death = self.config.weights
        scores = {"daily": nrmse(pred["daily"][1:], obs.daily[1:]),
                  "cum": nrmse(pred["cum"], obs.cum)}
        total = w_daily * scores["daily"] + w_cum * scores["cum"]
        if obs.deaths is not None and w_death > 0:
            scores["deaths"] = nrmse(pred["deaths"], obs.deaths)
            total += w_death * scores["deaths"]
        if not np.isfinite(total):
            return float("inf"), {}, None, None
        return float(total), scores, initial, pred["trajectory"]

    def sample_starts(self, count: int, seed: int) -> np.ndarray:
        # Keep starts away from the box edges: beyond ~0.95 the logistic
        # transform saturates and those coordinates present a near-zero
        # finite-difference gradient, stranding the whole start.
        sampler = qmc.LatinHypercube(d=self.n_params, seed=seed)
        u = 0.05 + 0.90 * sampler.random(count)
        return logit(u)

    def heuristic_start(self) -> np.ndarray:
        """A deterministic start seeded from the observed growth rates.

        Per segment, the log growth of the daily series maps onto the
        transmission rate roughly as beta ~ growth + removal (~1/7 per
        day); clinical rates start at literature-scale midpoints and
        breakpoints at their window centres.  One sane data-aware start
        sharply reduces how many random starts the solver needs.
        """
        t = self.data.n_train
        daily = self.observed.daily

        def level(i: int) -> float:
            a, b = max(1, i - 2), min(t, i + 3)
            return max(float(np.mean(daily[a:b])), 1e-6)

        mids = [0.5 * (wlo + whi) for _, wlo, whi in self.bp_windows]
        edges = [1.0] + mids + [float(t - 1)]
        betas = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a < 4.0:
                betas.append(0.25)
                continue
            growth = (np.log(level(int(b))) - np.log(level(int(a)))) / (b - a)
            betas.append(1.0 / 7.0 + growth)
        k = self.n_segments
        vals = (betas + [0.5] * k + [0.05] * k + [0.05] * k
                + [0.2, 0.1, 0.1, 0.1] + mids)
        u = (np.asarray(vals, dtype=float) - self.lo) / (self.hi - self.lo)
        return logit(np.clip(u, 0.05, 0.95))

    def heuristic_starts(self) -> np.ndarray:
        """The growth-rate start replicated over a coarse ascertainment grid.

        The reported fraction trades off against transmission almost exactly
        at the start of a fit, so which basin the damped solver lands in is
        decided mostly by where that fraction begins -- not by the starting
        loss, which can be lowest on a start that converges to the wrong
        basin.  Three copies of the data-aware start spanning low, middle and
        high ascertainment cover the plausible basins at negligible cost.
        """
        base = self.heuristic_start()
        k = self.n_segments
        rows = []
        for frac in (0.2, 0.5, 0.8):
            z = base.copy()
            u = (frac - self.lo[k:2 * k]) / (self.hi[k:2 * k] - self.lo[k:2 * k])
            z[k:2 * k] = logit(np.clip(u, 0.05, 0.95))
            rows.append(z)
        return np.vstack(rows)


def fit(data: FitData, breakpoint_estimates: list[float], config: FitConfig,
        curve: MobilityCurve | None = None) -> list[FitResult]:
    """Multi-start damped least-squares calibration for one geo-unit.

    Returns all successful starts sorted by loss; deterministic for a fixed
    ``config.seed``.  Raises FitFailureError when every start fails.
    """
    problem = FitProblem(data, breakpoint_estimates, config, curve)
    starts = np.vstack([problem.heuristic_starts(),
                        problem.sample_starts(config.initializer_count,
                                              config.seed)])
    max_nfev = config.max_iterations * (problem.n_params + 2)

    results: list[FitResult] = []
    failures: list[dict] = []
    for i, z0 in enumerate(starts):
        start_eval = problem.evaluate(z0)
        start_loss = start_eval[0]
        if not np.isfinite(start_loss):
            failures.append({"start": i, "error": "initial point not integrable"})
            continue
        sol = least_squares(problem.residuals, z0, method="lm",
                            diff_step=1e-6, ftol=config.ftol, xtol=config.xtol,
                            gtol=config.gtol, max_nfev=max_nfev)
        final_loss, scores, initial, traj = problem.evaluate(sol.x)
        if final_loss <= start_loss:
            z_best, best_loss, termination = sol.x, final_loss, int(sol.status)
        else:   # accepted steps must never end above their own start
            z_best, termination = z0, -2
            best_loss, scores, initial, traj = start_eval
        if not np.isfinite(best_loss) or initial is None:
            failures.append({"start": i, "error": "converged to non-integrable point"})
            continue
        params = problem.unpack(z_best)
        results.append(FitResult(
            geo_id=data.geo_id, start=data.start, train_days=data.n_train,
            population=data.population, params=params,
            breakpoints=list(params.breakpoints), loss=best_loss,
            nrmse=scores, initial=initial,
            cum_offset=float(problem.observed.cum[0]), trajectory=traj,
            diagnostics={"start": i, "start_loss": start_loss,
                         "nfev": int(sol.nfev), "termination": termination,
                         "message": str(sol.message)}))
    if not results:
        raise FitFailureError(failures)
    results.sort(key=lambda r: r.loss)
    for rank, r in enumerate(results):
        r.rank = rank
    return results


@dataclass(frozen=True)
class Band:
    central: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.central, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if not (c.shape == lo.shape == hi.shape):
            raise ValueError("band series must share a shape")
        object.__setattr__(self, "central", c)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def to_json(self) -> dict:
        return {"central": self.central.tolist(),
                "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Band":
        return cls(np.array(obj["central"], dtype=float),
                   np.array(obj["lower"], dtype=float),
                   np.array(obj["upper"], dtype=float))


@dataclass
class Forecast:
    geo_id: str
    start: dt.date         # date of model day 0 (training start)
    train_days: int
    horizon: int
    daily: Band
    cum: Band
    deaths: Band
    params: DiseaseParams
    s_fractions: list[tuple[float, float]]   # (segment start day, S/N)

    @property
    def dates(self) -> list[dt.date]:
        n = self.daily.central.size
        return [self.start + dt.timedelta(days=i) for i in range(n)]

    def to_json(self) -> dict:
        return {
            "geo_id": self.geo_id,
            "dates": [d.isoformat() for d in self.dates],
            "train_days": self.train_days,
            "horizon": self.horizon,
            "daily_cases": self.daily.to_json(),
            "cum_cases": self.cum.to_json(),
            "cum_deaths": self.deaths.to_json(),
            "params": self.params.to_json(),
            "s_fractions": [{"t": t, "fraction": f} for t, f in self.s_fractions],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Forecast":
        start = dt.date.fromisoformat(obj["dates"][0])
        return cls(
            geo_id=obj["geo_id"], start=start,
            train_days=int(obj["train_days"]), horizon=int(obj["horizon"]),
            daily=Band.from_json(obj["daily_cases"]),
            cum=Band.from_json(obj["cum_cases"]),
            deaths=Band.from_json(obj["cum_deaths"]),
            params=DiseaseParams.from_json(obj["params"]),
            s_fractions=[(float(e["t"]), float(e["fraction"]))
                         for e in obj["s_fractions"]])


def forecast(fits: list[FitResult], horizon: int,
             curve: MobilityCurve | None = None, k: int = 5,
             loss_ratio: float = 1.5) -> Forecast:
    """Central trajectory from the best fit; interval bounds from the
    elementwise spread of the top-k fits within ``loss_ratio`` of the best."""
    if not fits:
        raise ValueError("need at least one fit")
    best = min(fits, key=lambda r: r.loss)
    if curve is None:
        curve = flat_curve(best.start)
    chosen = [f for f in sorted(fits, key=lambda r: r.loss)[:k]
              if np.isfinite(f.loss) and f.loss <= loss_ratio * best.loss]
    if best not in chosen:
        chosen = [best] + chosen
    days = np.arange(best.train_days + horizon, dtype=float)

    runs = []
    for f in chosen:
        pred = predict_observables(f.params, f.initial, curve, days,
                                   cum_offset=f.cum_offset)
        runs.append(pred)
    central = runs[chosen.index(best)]

    def band(key: str, monotone: bool) -> Band:
        stack = np.stack([r[key] for r in runs])
        c = central[key].copy()
        lo = stack.min(axis=0)
        hi = stack.max(axis=0)
        if monotone:
            c, lo, hi = (np.maximum.accumulate(v) for v in (c, lo, hi))
        else:
            c, lo, hi = (np.maximum(v, 0.0) for v in (c, lo, hi))
        lo = np.minimum(lo, c)
        hi = np.maximum(hi, c)
        return Band(c, lo, hi)

    traj = central["trajectory"]
    n_pop = best.params.N
    s_fractions = [(float(t), float(np.interp(t, traj.t, traj.column("S")) / n_pop))
                   for t, _ in best.params.beta_segments]
    return Forecast(
        geo_id=best.geo_id, start=best.start, train_days=best.train_days,
        horizon=horizon, daily=band("daily", False), cum=band("cum", True),
        deaths=band("deaths", True), params=best.params,
        s_fractions=s_fractions)


def fit_to_artifact(results: list[FitResult], config: FitConfig,
                    mobility_index: TimeSeries | None,
                    breakpoint_estimates: list[float],
                    observed: ObservedArrays) -> dict:
    """Self-contained JSON form of a fit: enough to forecast and to run
    scenarios without re-reading any input files."""
    best = results[0]
    return {
        "geo_id": best.geo_id,
        "start_date": best.start.isoformat(),
        "train_days": best.train_days,
        "population": best.population,
        "params": best.params.to_json(),
        "breakpoints": best.breakpoints,
        "breakpoint_estimates": list(breakpoint_estimates),
        "loss": best.loss,
        "nrmse": best.nrmse,
        "initial_state": best.initial.to_json(),
        "cum_offset": best.cum_offset,
        "diagnostics": best.diagnostics,
        "alternates": [
            {"params": r.params.to_json(), "loss": r.loss,
             "initial_state": r.initial.to_json()}
            for r in results[1:config.top_k]
        ],
        "observed": {
            "cum_cases": observed.cum.tolist(),
            "cum_deaths": None if observed.deaths is None
            else observed.deaths.tolist(),
        },
        "mobility_index": None if mobility_index is None
        else mobility_index.to_json(),
        "config": config.to_json(),
    }


def artifact_to_fits(artifact: dict) -> tuple[list[FitResult], MobilityCurve]:
    """Rebuild forecast inputs (lightweight FitResults and the aligned
    mobility curve) from a fit artifact."""
    from .model import build_mobility_curve
    start = dt.date.fromisoformat(artifact["start_date"])

    def lift(entry: dict, loss_value: float, rank: int) -> FitResult:
        params = DiseaseParams.from_json(entry["params"])
        return FitResult(
            geo_id=artifact["geo_id"], start=start,
            train_days=int(artifact["train_days"]),
            population=float(artifact["population"]), params=params,
            breakpoints=list(params.breakpoints), loss=float(loss_value),
            nrmse={}, initial=CompartmentState.from_json(entry["initial_state"]),
            cum_offset=float(artifact["cum_offset"]), trajectory=None,
            diagnostics={}, rank=rank)

    fits = [lift(artifact, artifact["loss"], 0)]
    for i, alt in enumerate(artifact.get("alternates", []), start=1):
        fits.append(lift(alt, alt["loss"], i))
    if artifact.get("mobility_index"):
        index = TimeSeries.from_json(artifact["mobility_index"])
        curve = build_mobility_curve(index).aligned_to(start)
    else:
        curve = flat_curve(start)
    return fits, curve
