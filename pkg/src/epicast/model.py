"""Mobility-coupled compartmental transmission model.

Eight compartments: susceptible S, contact-reduced Y, unreported infectious
A, pre-confirmation infectious C, confirmed active I, severe W, recovered R,
dead D.  Force of infection is beta*S*(I+A+C)/N, split between A and C by
the reporting fraction xi.  A mobility-derived rate moves mass between S
and Y: when mobility rises people return to normal contact (Y -> S), when
it falls they withdraw (S -> Y); the two flows are never simultaneously
active.  beta, xi, omega (worsening) and mu_d (death) are piecewise-constant
over fitted time segments; the remaining rates are global.  Recovered
immunity wanes back to S at rate rho (10-month mean duration).
"""
from __future__ import annotations

import datetime as dt
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np

from .series import TimeSeries

STATE_ORDER = ("S", "Y", "A", "C", "I", "W", "R", "D")
RHO_DEFAULT = 1.0 / 304.375   # 1 / (10 months of 365.25/12 days)
_XI_EPS = 1e-6


class InfeasibleSeedError(ValueError):
    """Initial conditions leave no susceptible mass (S < 0)."""


@dataclass(frozen=True)
class CompartmentState:
    S: float
    Y: float
    A: float
    C: float
    I: float
    W: float
    R: float
    D: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in STATE_ORDER], dtype=float)

    @classmethod
    def from_array(cls, vec) -> "CompartmentState":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(STATE_ORDER),):
            raise ValueError(f"state vector must have {len(STATE_ORDER)} entries")
        return cls(*(float(v) for v in vec))

    @property
    def total(self) -> float:
        return float(sum(getattr(self, k) for k in STATE_ORDER))

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in STATE_ORDER}

    @classmethod
    def from_json(cls, obj: dict) -> "CompartmentState":
        return cls(**{k: float(obj[k]) for k in STATE_ORDER})


Segments = tuple[tuple[float, float], ...]


def _check_segments(name: str, segments, lo: float, hi: float) -> Segments:
    segs = tuple((float(t), float(v)) for t, v in segments)
    if not segs:
        raise ValueError(f"{name}: need at least one segment")
    if segs[0][0] != 0.0:
        raise ValueError(f"{name}: first segment must start at t=0")
    starts = [t for t, _ in segs]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError(f"{name}: segment starts must be strictly increasing")
    for _, v in segs:
        if not (lo <= v <= hi):
            raise ValueError(f"{name}: value {v} outside [{lo}, {hi}]")
    return segs


@dataclass(frozen=True)
class DiseaseParams:
    """Piecewise transmission parameters plus global progression rates."""

    N: float
    beta_segments: Segments
    xi_segments: Segments
    omega_segments: Segments
    mu_segments: Segments
    alpha: float
    gamma_a: float
    gamma_i: float
    gamma_w: float
    rho: float = RHO_DEFAULT

    def __post_init__(self):
        if self.N <= 0:
            raise ValueError("population N must be positive")
        object.__setattr__(self, "beta_segments",
                           _check_segments("beta", self.beta_segments, 0.0, np.inf))
        object.__setattr__(self, "xi_segments",
                           _check_segments("xi", self.xi_segments, 0.0, 1.0))
        object.__setattr__(self, "omega_segments",
                           _check_segments("omega", self.omega_segments, 0.0, np.inf))
        object.__setattr__(self, "mu_segments",
                           _check_segments("mu_d", self.mu_segments, 0.0, np.inf))
        for name in ("alpha", "gamma_a", "gamma_i", "gamma_w", "rho"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def single_segment(cls, N: float, beta: float, xi: float, omega: float,
                       mu_d: float, alpha: float, gamma_a: float, gamma_i: float,
                       gamma_w: float, rho: float = RHO_DEFAULT) -> "DiseaseParams":
        seg = lambda v: ((0.0, v),)
        return cls(N, seg(beta), seg(xi), seg(omega), seg(mu_d),
                   alpha, gamma_a, gamma_i, gamma_w, rho)

    @property
    def breakpoints(self) -> list[float]:
        """Interior segment boundaries (shared layout assumed across params)."""
        return [t for t, _ in self.beta_segments[1:]]

    def to_json(self) -> dict:
        pack = lambda segs: [{"t": t, "v": v} for t, v in segs]
        return {
            "N": self.N,
            "alpha": self.alpha,
            "gamma_a": self.gamma_a,
            "gamma_i": self.gamma_i,
            "gamma_w": self.gamma_w,
            "rho": self.rho,
            "beta": pack(self.beta_segments),
            "xi": pack(self.xi_segments),
            "omega": pack(self.omega_segments),
            "mu_d": pack(self.mu_segments),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DiseaseParams":
        unpack = lambda lst: tuple((float(e["t"]), float(e["v"])) for e in lst)
        return cls(
            N=float(obj["N"]),
            beta_segments=unpack(obj["beta"]),
            xi_segments=unpack(obj["xi"]),
            omega_segments=unpack(obj["omega"]),
            mu_segments=unpack(obj["mu_d"]),
            alpha=float(obj["alpha"]),
            gamma_a=float(obj["gamma_a"]),
            gamma_i=float(obj["gamma_i"]),
            gamma_w=float(obj["gamma_w"]),
            rho=float(obj.get("rho", RHO_DEFAULT)),
        )


def param_at(segments: Segments, t: float) -> float:
    """Value of the piecewise-constant parameter at time t (days).

    Intervals are left-closed: segment k applies on [t_k, t_{k+1}); the last
    segment extends indefinitely.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if not segments:
        raise ValueError("empty segment list")
    starts = [s for s, _ in segments]
    return segments[bisect_right(starts, t) - 1][1]


@dataclass(frozen=True)
class MobilityCurve:
    """Normalized day-over-day mobility change as a function of model time.

    ``days`` is the grid (in days since ``start``) where the change signal g
    is known; between grid points the curve interpolates linearly, beyond the
    last point it holds ``tail`` (mean of the last two weeks of g), and
    before the first point it holds the first value.
    """

    days: np.ndarray
    g: np.ndarray
    tail: float
    baseline: float
    start: dt.date

    def __post_init__(self):
        days = np.asarray(self.days, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if days.ndim != 1 or days.size < 1 or days.shape != g.shape:
            raise ValueError("days and g must be matching non-empty vectors")
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "g", g)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        inner = np.interp(t_arr, self.days, self.g)
        out = np.where(t_arr > self.days[-1], self.tail, inner)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def aligned_to(self, model_start: dt.date) -> "MobilityCurve":
        """Re-express the grid in days since ``model_start``."""
        offset = (self.start - model_start).days
        return replace(self, days=self.days + offset, start=model_start)


ZERO_CURVE = MobilityCurve(np.array([0.0]), np.array([0.0]), 0.0, 1.0,
                           dt.date(2020, 1, 1))


def flat_curve(start: dt.date = dt.date(2020, 1, 1)) -> MobilityCurve:
    """A curve that is identically zero (no mobility coupling)."""
    return MobilityCurve(np.array([0.0]), np.array([0.0]), 0.0, 1.0, start)


def build_mobility_curve(mobility: TimeSeries) -> MobilityCurve:
    """Turn a raw mobility index into the normalized change signal f_mob.

    The index is smoothed with a centered 7-day rolling mean (windows
    truncated at the series edges), the day-over-day difference of the
    smoothed index is divided by a baseline level (mean of the first 7
    smoothed values), and the result is interpolated piecewise-linearly.
    Beyond the data the curve holds the mean of the last 14 change values.
    """
    m = mobility.values
    if m.size < 8:
        raise ValueError("need at least 8 mobility observations")
    smoothed = np.array([m[max(0, i - 3):i + 4].mean() for i in range(m.size)])
    baseline = float(smoothed[:7].mean())
    if abs(baseline) < 1e-12:
        raise ValueError("degenerate mobility input: zero baseline level")
    g = np.diff(smoothed) / baseline
    days = np.arange(1, m.size, dtype=float)
    tail = float(g[-min(14, g.size):].mean())
    return MobilityCurve(days, g, tail, baseline, mobility.start)


def transfer_rates(curve: MobilityCurve, t: float) -> tuple[float, float]:
    """(T_Y_to_S, T_S_to_Y) at time t; at most one of the two is nonzero."""
    if t < 0:
        raise ValueError("t must be non-negative")
    f = curve(t)
    return max(0.0, f), max(0.0, -f)


def derivatives_vec(t: float, y: np.ndarray, params: DiseaseParams,
                    curve: MobilityCurve) -> np.ndarray:
    """RHS of the model ODEs on a raw state vector in STATE_ORDER."""
    s, yy, a, c, i, w, r, _ = y
    beta = param_at(params.beta_segments, t)
    xi = param_at(params.xi_segments, t)
    omega = param_at(params.omega_segments, t)
    mu_d = param_at(params.mu_segments, t)

    lam = beta * s * (i + a + c) / params.N
    t_ys, t_sy = transfer_rates(curve, t)
    pool = s + yy
    flow_ys = min(yy, t_ys * pool)   # Y -> S (mobility recovering)
    flow_sy = min(s, t_sy * pool)    # S -> Y (mobility dropping)

    conf = params.alpha * c
    rec_i = params.gamma_i * i
    rec_a = params.gamma_a * a
    rec_w = params.gamma_w * w
    worsen = omega * i
    die = mu_d * w
    wane = params.rho * r

    ds = -lam + wane + flow_ys - flow_sy
    dy = flow_sy - flow_ys
    da = (1.0 - xi) * lam - rec_a
    dc = xi * lam - conf
    di = conf - rec_i - worsen
    dw = worsen - die - rec_w
    dr = rec_i + rec_a + rec_w - wane
    dd = die
    return np.array([ds, dy, da, dc, di, dw, dr, dd])


def derivatives(state: CompartmentState, t: float, params: DiseaseParams,
                curve: MobilityCurve) -> np.ndarray:
    """Per-compartment rates at (state, t); entries sum to zero exactly."""
    return derivatives_vec(t, state.as_array(), params, curve)


def initial_state(cases: TimeSeries, deaths: TimeSeries | None,
                  params: DiseaseParams, t0: int = 0) -> CompartmentState:
    """Seed the compartments from reported cumulative counts at day ``t0``.

    Active confirmed cases are estimated as those reported in the trailing
    14 days (roughly one infectious period); the pre-confirmation pool C
    matches the active count and the unreported pool A scales it by
    (1 - xi0)/xi0.  R starts at 20% of the population (standing immunity)
    plus everyone reported, resolved, and not dead.  The severe and
    contact-reduced compartments start empty.
    """
    if not 0 <= t0 < len(cases):
        raise ValueError(f"t0={t0} outside the case series")
    cum = float(cases.values[t0])
    prior = float(cases.values[t0 - 14]) if t0 >= 14 else 0.0
    active = max(0.0, cum - prior)

    d0 = 0.0
    if deaths is not None:
        date0 = cases.start + dt.timedelta(days=t0)
        if deaths.start <= date0 <= deaths.end:
            d0 = float(deaths.value_on(date0))

    xi0 = params.xi_segments[0][1]
    i0 = active
    c0 = active
    a0 = active * (1.0 - xi0) / max(xi0, _XI_EPS)
    recovered = max(0.0, cum - active - d0)
    r0 = 0.2 * params.N + recovered
    s0 = params.N - (i0 + c0 + a0 + r0 + d0)
    if s0 < 0:
        raise InfeasibleSeedError(
            f"seed leaves S={s0:.1f} < 0 for N={params.N:.0f} "
            f"(active={active:.0f}, xi0={xi0:.3f})")
    return CompartmentState(S=s0, Y=0.0, A=a0, C=c0, I=i0, W=0.0, R=r0, D=d0)
