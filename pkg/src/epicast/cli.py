"""Command-line entry points.

Each subcommand is a thin shell over the library: read files, call one
stage, write JSON.  The `run` and `serve` subcommands operate on a
manifest; the rest work on explicit file arguments so stages can be
scripted independently.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

import numpy as np

from . import geo, ingest
from .analytics import RiskThresholds, build_report
from .calibrate import (Forecast, FitConfig, FitData, artifact_to_fits, fit,
                        fit_to_artifact, forecast)
from .model import build_mobility_curve
from .pipeline import Manifest, preprocess_unit, resolve_root, run_pipeline
from .preprocess import isotonic_series
from .scenarios import (HospParams, ScenarioSpec, fit_hosp, project_hosp,
                        run_scenario_from_artifact)
from .series import TimeSeries


def _write_json(path: str, payload: dict) -> None:
    out = Path(path)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_unit_payload(path: str, geo_id: str) -> dict:
    doc = _read_json(path)
    if "units" in doc:
        if geo_id not in doc["units"]:
            raise SystemExit(f"geo unit {geo_id!r} not in {path}")
        return doc["units"][geo_id]
    if doc.get("geo_id") not in (None, geo_id):
        raise SystemExit(
            f"{path} holds geo unit {doc['geo_id']!r}, not {geo_id!r}")
    return doc


def _series_from_payload(payload: dict, key: str) -> TimeSeries | None:
    values = payload.get(key)
    if values is None:
        return None
    start = dt.date.fromisoformat(payload["start_date"])
    return TimeSeries(payload["geo_id"], start, np.asarray(values, dtype=float))


def cmd_cluster(args) -> int:
    commute = ingest.load_commute(args.commute)
    states = None
    if args.state_constraint:
        states = ingest.load_states(args.state_constraint)
    populations = None
    if args.population:
        populations = ingest.load_population(args.population).population
    graph = geo.build_graph(commute.rows(), state_constraint=states)
    clustering = geo.louvain(graph, resolution=args.resolution,
                             populations=populations)
    _write_json(args.out, clustering.to_json())
    print(f"clustered {len(clustering.assignment)} counties into "
          f"{len(clustering.clusters)} geo-units -> {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    tables = ingest.load_cases(args.cases)
    populations = {}
    if args.population:
        populations = ingest.load_population(args.population).population
    units = {}
    for gid in sorted(tables.cases):
        pre = preprocess_unit(gid, tables.cases[gid], tables.deaths.get(gid),
                              populations.get(gid),
                              sensitivity=args.sensitivity)
        units[gid] = pre["payload"]
    _write_json(args.out, {"units": units})
    print(f"preprocessed {len(units)} geo-units -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    payload = _load_unit_payload(args.preprocessed, args.geo)
    cases = _series_from_payload(payload, "cum_cases")
    if cases is None:
        raise SystemExit(f"no cum_cases for {args.geo!r} in {args.preprocessed}")
    cases = TimeSeries(args.geo, cases.start, cases.values)
    deaths = _series_from_payload(payload, "cum_deaths")

    population = payload.get("population")
    if args.population is not None:
        try:
            population = float(args.population)
        except ValueError:
            table = ingest.load_population(args.population).population
            if args.geo not in table:
                raise SystemExit(
                    f"geo unit {args.geo!r} not in {args.population}")
            population = table[args.geo]
    if population is None:
        raise SystemExit("population unknown: pass --population (value or "
                         "CSV) or embed it at preprocess time")

    mobility = None
    curve = None
    if args.mobility:
        mob_tables = ingest.load_mobility(args.mobility)
        mobility = mob_tables.series.get(args.geo)
        if mobility is None:
            raise SystemExit(f"geo unit {args.geo!r} not in {args.mobility}")
        curve = build_mobility_curve(mobility).aligned_to(cases.start)

    config = FitConfig.from_json(_read_json(args.config)) if args.config \
        else FitConfig()
    estimates = [float(e["day"]) for e in payload.get("inflections", [])]
    data = FitData(geo_id=args.geo, cases=cases, deaths=deaths,
                   population=float(population), train_days=args.train_days)
    results = fit(data, estimates, config, curve)
    artifact = fit_to_artifact(results, config, mobility, estimates,
                               data.observed())
    _write_json(args.out, artifact)
    best = results[0]
    print(f"fit {args.geo}: loss={best.loss:.5f} "
          f"breakpoints={[round(b, 1) for b in best.breakpoints]} -> {args.out}")
    return 0


def cmd_forecast(args) -> int:
    artifact = _read_json(args.fit)
    fits, curve = artifact_to_fits(artifact)
    config = FitConfig.from_json(artifact.get("config", {}))
    fcast = forecast(fits, args.horizon, curve, k=config.top_k,
                     loss_ratio=config.loss_ratio)
    _write_json(args.out, fcast.to_json())
    total = fcast.cum.central[-1]
    print(f"forecast {fcast.geo_id}: horizon={args.horizon}d "
          f"final_cum={total:.0f} -> {args.out}")
    return 0


def cmd_risk(args) -> int:
    fcast = Forecast.from_json(_read_json(args.forecast))
    tables = ingest.load_cases(args.cases)
    if fcast.geo_id not in tables.cases:
        raise SystemExit(f"geo unit {fcast.geo_id!r} not in {args.cases}")
    populations = ingest.load_population(args.population).population
    if fcast.geo_id not in populations:
        raise SystemExit(f"geo unit {fcast.geo_id!r} not in {args.population}")
    thresholds = RiskThresholds.from_json(json.loads(args.thresholds)) \
        if args.thresholds else RiskThresholds()
    cum = isotonic_series(tables.cases[fcast.geo_id])
    report = build_report(None, fcast, cum, populations[fcast.geo_id],
                          thresholds)
    _write_json(args.out, {
        "geo_id": fcast.geo_id,
        "current_risk": report.current_risk,
        "projected_risks": report.projected_risks,
        "thresholds": thresholds.to_json(),
    })
    print(f"risk {fcast.geo_id}: current={report.current_risk} "
          f"projected={report.projected_risks} -> {args.out}")
    return 0


def cmd_scenario(args) -> int:
    artifact = _read_json(args.fit)
    spec = ScenarioSpec(geo_id=artifact["geo_id"],
                        adjust_percent=args.adjust,
                        from_date=dt.date.fromisoformat(args.from_date),
                        horizon=args.horizon, label=args.label)
    result = run_scenario_from_artifact(spec, artifact)
    _write_json(args.out, result.to_json())
    delta = result.scenario.cum.central[-1] - result.base.cum.central[-1]
    print(f"scenario {spec.geo_id}: adjust={spec.adjust_percent:+.0f}% "
          f"from {spec.from_date} delta_cum={delta:+.0f} -> {args.out}")
    return 0


def _census_series(path: str, geo_id: str) -> tuple[TimeSeries, TimeSeries]:
    tables = ingest.load_hosp_census(path)
    if geo_id not in tables.hosp:
        raise SystemExit(f"geo unit {geo_id!r} not in {path}")
    return tables.hosp[geo_id], tables.icu[geo_id]


def cmd_hosp_fit(args) -> int:
    fcast = Forecast.from_json(_read_json(args.forecast))
    hosp, icu = _census_series(args.census, fcast.geo_id)
    incidence = TimeSeries(fcast.geo_id, fcast.start,
                           fcast.daily.central[:fcast.train_days])
    result = fit_hosp(incidence, hosp, icu, gamma_u=args.gamma_u,
                      starts=args.starts)
    _write_json(args.out, {
        "geo_id": fcast.geo_id,
        "params": result.params.to_json(),
        "loss": result.loss,
        "nrmse": {"hosp_census": result.nrmse_hosp,
                  "icu_census": result.nrmse_icu},
        "overlap_days": result.overlap_days,
        "start_date": result.start.isoformat(),
    })
    print(f"hosp fit {fcast.geo_id}: loss={result.loss:.5f} "
          f"overlap={result.overlap_days}d -> {args.out}")
    return 0


def cmd_hosp_project(args) -> int:
    doc = _read_json(args.params)
    params = HospParams.from_json(doc["params"])
    fcast = Forecast.from_json(_read_json(args.forecast))
    h0 = u0 = 0.0
    if args.census:
        hosp, icu = _census_series(args.census, fcast.geo_id)
        h0 = float(hosp.values[-1])
        u0 = float(icu.values[-1])
    projection = project_hosp(params, fcast, h0=h0, u0=u0)
    _write_json(args.out, projection.to_json())
    print(f"hosp project {fcast.geo_id}: peak_census="
          f"{projection.hosp.central.max():.0f} -> {args.out}")
    return 0


def cmd_run(args) -> int:
    manifest = Manifest.load(args.manifest)
    summary = run_pipeline(manifest, force_fit=args.force_fit)
    for unit in summary.units:
        stages = ",".join(f"{k}={v}" for k, v in unit["stages"].items())
        line = f"{unit['geo_id']}: {unit['status']} ({unit['seconds']}s) {stages}"
        if unit["status"] != "ok":
            line += f" error: {unit.get('error')}"
        print(line)
    print(f"artifacts -> {resolve_root(manifest)}")
    return 0 if summary.ok else 1


def cmd_serve(args) -> int:
    from .server import serve

    manifest = Manifest.load(args.manifest)
    serve(resolve_root(manifest), bind=args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epicast",
        description="county-commute clustering, epidemic model fitting, "
                    "forecasting, and risk scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="group counties by commute flows")
    p.add_argument("--commute", required=True)
    p.add_argument("--state-constraint", default=None)
    p.add_argument("--population", default=None)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("preprocess", help="denoise series, find inflections")
    p.add_argument("--cases", required=True)
    p.add_argument("--population", default=None)
    p.add_argument("--sensitivity", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("fit", help="calibrate the transmission model")
    p.add_argument("--geo", required=True)
    p.add_argument("--preprocessed", required=True)
    p.add_argument("--mobility", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--population", default=None,
                   help="population value or population CSV path")
    p.add_argument("--train-days", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="project cases from a stored fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--horizon", type=int, default=28)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("risk", help="score current and projected risk")
    p.add_argument("--forecast", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--population", required=True)
    p.add_argument("--thresholds", default=None,
                   help='JSON, e.g. {"kappa":10,"lambda":5,"tau":2}')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("scenario", help="replay a fit under adjusted mobility")
    p.add_argument("--fit", required=True)
    p.add_argument("--adjust", type=float, required=True)
    p.add_argument("--from", dest="from_date", required=True)
    p.add_argument("--horizon", type=int, default=28)
    p.add_argument("--label", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("hosp", help="hospital and ICU census chain")
    hosp_sub = p.add_subparsers(dest="hosp_command", required=True)

    hp = hosp_sub.add_parser("fit", help="fit admission/transfer rates")
    hp.add_argument("--forecast", required=True)
    hp.add_argument("--census", required=True)
    hp.add_argument("--gamma-u", type=float, default=0.1)
    hp.add_argument("--starts", type=int, default=8)
    hp.add_argument("--out", required=True)
    hp.set_defaults(func=cmd_hosp_fit)

    hp = hosp_sub.add_parser("project", help="project census from a forecast")
    hp.add_argument("--params", required=True)
    hp.add_argument("--forecast", required=True)
    hp.add_argument("--census", default=None)
    hp.add_argument("--out", required=True)
    hp.set_defaults(func=cmd_hosp_project)

    p = sub.add_parser("run", help="run the full pipeline from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--force-fit", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="serve artifacts over HTTP")
    p.add_argument("--manifest", required=True)
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
