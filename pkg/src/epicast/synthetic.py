"""Synthetic epidemics with known ground truth.

Everything here closes the loop for self-consistency checks: data are
generated by the same model, the same seeding rule, and the same observable
definitions the fitter assumes, so the generating parameters are an exact
zero-loss optimum of the fit problem.  Also builds the multi-county demo
dataset (two commute clusters, a mobility dip, hospital census) used by the
pipeline tests and the example scripts.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from . import ingest
from .calibrate import predict_observables
from .model import DiseaseParams, MobilityCurve, build_mobility_curve, flat_curve, initial_state
from .scenarios import HospParams, integrate_hosp
from .series import TimeSeries

DEFAULT_START = dt.date(2020, 3, 1)


def single_segment_params(N: float, beta: float = 0.3, xi: float = 0.35,
                          omega: float = 0.02, mu_d: float = 0.05,
                          alpha: float = 0.2, gamma_a: float = 0.1,
                          gamma_i: float = 0.1, gamma_w: float = 0.07) -> DiseaseParams:
    return DiseaseParams.single_segment(N, beta, xi, omega, mu_d,
                                        alpha, gamma_a, gamma_i, gamma_w)


def two_segment_params(N: float, beta1: float = 0.32, beta2: float = 0.12,
                       break_day: float = 45.0, xi: float = 0.35,
                       omega: float = 0.02, mu_d: float = 0.05,
                       alpha: float = 0.2, gamma_a: float = 0.1,
                       gamma_i: float = 0.1, gamma_w: float = 0.07) -> DiseaseParams:
    """A growth regime switching to decline at ``break_day`` (beta drop only)."""
    return DiseaseParams(
        N=N,
        beta_segments=((0.0, beta1), (break_day, beta2)),
        xi_segments=((0.0, xi), (break_day, xi)),
        omega_segments=((0.0, omega), (break_day, omega)),
        mu_segments=((0.0, mu_d), (break_day, mu_d)),
        alpha=alpha, gamma_a=gamma_a, gamma_i=gamma_i, gamma_w=gamma_w)


def synthesize_observed(params: DiseaseParams, n_days: int,
                        curve: MobilityCurve | None = None, c0: float = 500.0,
                        d0: float = 0.0, geo_id: str = "synthetic",
                        start: dt.date = DEFAULT_START, noise: float = 0.0,
                        seed: int = 0) -> dict:
    """Generate observed cumulative cases and deaths from known parameters.

    Seeding matches the fitter's rule exactly (the opening cumulative count
    ``c0`` is treated as fully active, deaths start at ``d0``), so with
    ``noise=0`` the generating parameters reproduce the data to integrator
    precision.  ``noise`` applies multiplicative Gaussian perturbations to
    the daily increments; cumulative series stay monotone by construction.
    """
    if curve is None:
        curve = flat_curve(start)
    seed_cases = TimeSeries(geo_id, start, np.array([c0]))
    seed_deaths = TimeSeries(geo_id, start, np.array([d0]))
    initial = initial_state(seed_cases, seed_deaths, params, 0)
    days = np.arange(n_days, dtype=float)
    pred = predict_observables(params, initial, curve, days, cum_offset=c0,
                               rtol=1e-10, atol=1e-12 * params.N)
    cum = pred["cum"].copy()
    deaths = pred["deaths"].copy()
    if noise > 0:
        rng = np.random.default_rng(seed)
        for arr in (cum, deaths):
            inc = np.diff(arr)
            factors = np.clip(1.0 + noise * rng.standard_normal(inc.size), 0.0, None)
            arr[1:] = arr[0] + np.cumsum(inc * factors)
    daily = np.empty_like(cum)
    daily[0] = cum[0]
    daily[1:] = np.diff(cum)
    return {
        "cases": TimeSeries(geo_id, start, cum),
        "deaths": TimeSeries(geo_id, start, deaths),
        "daily": TimeSeries(geo_id, start, daily),
        "initial": initial,
        "trajectory": pred["trajectory"],
        "params": params,
        "curve": curve,
    }


def mobility_dip_index(n_days: int, dip_day: int, dip_frac: float = 0.3,
                       ramp_days: int = 7, level: float = 100.0,
                       geo_id: str = "synthetic",
                       start: dt.date = DEFAULT_START) -> TimeSeries:
    """Baseline-level index dropping linearly to level*(1-dip_frac)."""
    values = np.full(n_days, level)
    for i in range(n_days):
        if i >= dip_day:
            step = min(i - dip_day, ramp_days)
            values[i] = level * (1.0 - dip_frac * step / ramp_days)
    return TimeSeries(geo_id, start, values)


_DEMO_COUNTIES = {
    # county id -> (state, population, cluster tag)
    "A01": ("SA", 800_000.0, "A"),
    "A02": ("SA", 400_000.0, "A"),
    "A03": ("SA", 250_000.0, "A"),
    "A04": ("SA", 150_000.0, "A"),
    "B01": ("SB", 600_000.0, "B"),
    "B02": ("SB", 300_000.0, "B"),
    "B03": ("SB", 200_000.0, "B"),
    "B04": ("SB", 100_000.0, "B"),
}

DEMO_HOSP_TRUTH = HospParams(eta_h=0.08, gamma_h=0.12, eta_u=0.05,
                             gamma_u=0.1, mu_h=0.03)


def demo_dataset(outdir, n_days: int = 140, seed: int = 0,
                 start: dt.date = DEFAULT_START) -> dict:
    """Write the four input CSVs plus a hospital census file for a two-cluster
    synthetic region; returns the ground truth used to generate them."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    groups: dict[str, list[str]] = {}
    for county, (_, _, tag) in _DEMO_COUNTIES.items():
        groups.setdefault(tag, []).append(county)
    pop = {c: p for c, (_, p, _) in _DEMO_COUNTIES.items()}

    truth = {}
    cases: dict[str, TimeSeries] = {}
    deaths: dict[str, TimeSeries] = {}
    mobility: dict[str, TimeSeries] = {}
    hosp: dict[str, TimeSeries] = {}
    icu: dict[str, TimeSeries] = {}

    specs = {
        "A": dict(beta1=0.21, beta2=0.09, break_day=60.0, c0=900.0,
                  dip_day=55, dip_frac=0.35),
        "B": dict(beta1=0.20, beta2=0.085, break_day=75.0, c0=500.0,
                  dip_day=73, dip_frac=0.30),
    }
    # the pipeline labels clusters c0, c1, ... ordered by minimum member id,
    # so group A (containing A01) becomes c0 and group B becomes c1
    cluster_ids = {tag: f"c{i}" for i, tag in enumerate(sorted(groups))}
    for tag, members in groups.items():
        cid = cluster_ids[tag]
        total = sum(pop[c] for c in members)
        sp = specs[tag]
        index = mobility_dip_index(n_days, sp["dip_day"], sp["dip_frac"],
                                   geo_id=cid, start=start)
        curve = build_mobility_curve(index).aligned_to(start)
        params = two_segment_params(total, beta1=sp["beta1"], beta2=sp["beta2"],
                                    break_day=sp["break_day"])
        obs = synthesize_observed(params, n_days, curve=curve, c0=sp["c0"],
                                  start=start, geo_id=cid,
                                  noise=0.02, seed=seed + ord(tag))
        truth[cid] = {"params": params, "members": sorted(members),
                      "population": total, "curve": curve}

        # counties observe a fixed share of the cluster epidemic
        for c in members:
            share = pop[c] / total
            cases[c] = TimeSeries(c, start, np.floor(obs["cases"].values * share))
            deaths[c] = TimeSeries(c, start, np.floor(obs["deaths"].values * share))
            mobility[c] = TimeSeries(c, start, index.values.copy())

        h, u, _ = integrate_hosp(DEMO_HOSP_TRUTH, obs["daily"].values)
        wobble = 1.0 + 0.01 * rng.standard_normal(n_days)
        hosp[cid] = TimeSeries(cid, start, np.maximum(h * wobble, 0.0))
        icu[cid] = TimeSeries(cid, start, np.maximum(u, 0.0))

    ingest.write_cases(outdir / "cases.csv", cases, deaths)
    ingest.write_mobility(outdir / "mobility.csv", mobility)
    with open(outdir / "population.csv", "w") as fh:
        fh.write("geo_id,population\n")
        for c in sorted(pop):
            fh.write(f"{c},{pop[c]:.0f}\n")
    with open(outdir / "states.csv", "w") as fh:
        fh.write("geo_id,state\n")
        for c, (state, _, _) in sorted(_DEMO_COUNTIES.items()):
            fh.write(f"{c},{state}\n")
    with open(outdir / "commute.csv", "w") as fh:
        fh.write("home_id,work_id,workers\n")
        counties = sorted(_DEMO_COUNTIES)
        for i in counties:
            for j in counties:
                if i == j:
                    continue
                same = _DEMO_COUNTIES[i][2] == _DEMO_COUNTIES[j][2]
                base = 1e-3 if same else 2e-6
                flow = base * pop[i] * pop[j] / 1e5
                fh.write(f"{i},{j},{flow:.1f}\n")
    ingest.write_hosp_census(outdir / "census.csv", hosp, icu)
    return {"truth": truth, "hosp_truth": DEMO_HOSP_TRUTH,
            "populations": pop, "start": start, "n_days": n_days}
