#!/usr/bin/env python3
"""End-to-end tour: synthesize a region, run the pipeline, show the results.

Generates the two-cluster demo dataset into a scratch directory, runs
cluster -> preprocess -> fit -> forecast -> risk over every unit, then prints
a short report per cluster (fitted regimes, reproduction numbers, risk) and
a three-scenarios comparison for the first one.  Everything it does is also
reachable through the `epicast` CLI; see the printed commands.
"""
import argparse
import datetime as dt
import json
import sys
import tempfile
from pathlib import Path

from epicast.calibrate import FitConfig
from epicast.pipeline import ArtifactStore, Manifest, resolve_root, run_pipeline
from epicast.scenarios import ScenarioSpec, run_scenario_from_artifact
from epicast.synthetic import demo_dataset

# the demo units converge from the data-aware starts; a light budget keeps
# the walkthrough under a minute without changing the story
DEMO_FIT = FitConfig(initializer_count=6, max_iterations=80, top_k=3)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", default=None,
                    help="keep data + artifacts here (default: temp dir)")
    ap.add_argument("--days", type=int, default=140)
    ap.add_argument("--horizon", type=int, default=28)
    args = ap.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(
        tempfile.mkdtemp(prefix="epicast_demo_"))
    datadir = workdir / "data"
    print(f"# generating synthetic region under {workdir}")
    demo_dataset(datadir, n_days=args.days)

    manifest = Manifest(
        cases_path=datadir / "cases.csv",
        commute_path=datadir / "commute.csv",
        population_path=datadir / "population.csv",
        mobility_path=datadir / "mobility.csv",
        states_path=datadir / "states.csv",
        census_path=datadir / "census.csv",
        fit_config=DEMO_FIT,
        horizon=args.horizon,
        workers=2,
        artifact_root=workdir / "artifacts",
    )

    print("# running the pipeline (cluster -> preprocess -> fit -> forecast -> risk)")
    summary = run_pipeline(manifest)
    for unit in summary.units:
        status = unit["status"]
        line = f"  {unit['geo_id']}: {status}"
        if status != "ok":
            line += f" ({unit.get('error', '?')})"
        print(line)
    if any(u["status"] != "ok" for u in summary.units):
        return 1

    store = ArtifactStore(resolve_root(manifest))
    for geo_id in store.list_units():
        fit = store.read("fit", geo_id)
        fc = store.read("forecast", geo_id)
        risk = store.read("risk", geo_id)
        analytics = store.read("analytics", geo_id)
        betas = [round(seg["v"], 3) for seg in fit["params"]["beta"]]
        bps = [round(b, 1) for b in fit["breakpoints"]]
        print(f"\n== {geo_id} (population {fit['population']:,.0f})")
        print(f"  transmission regimes beta={betas}, switching at day {bps}")
        print(f"  R0 {analytics['r0']:.2f}, latest R_eff "
              f"{analytics['r_eff'][-1]['value']:.2f}, "
              f"risk {risk['current_risk']} -> {risk['projected_risks']}")
        cum = fc["cum_cases"]["central"]
        print(f"  cumulative cases: observed {cum[fit['train_days'] - 1]:,.0f}"
              f" -> forecast day +{args.horizon} {cum[-1]:,.0f}")

    geo_id = store.list_units()[0]
    fit_artifact = store.read("fit", geo_id)
    train_end = (dt.date.fromisoformat(fit_artifact["start_date"])
                 + dt.timedelta(days=fit_artifact["train_days"] - 1))
    print(f"\n# counterfactual mobility cuts for {geo_id} from {train_end}")
    base_final = None
    for adjust in (0.0, -5.0, -10.0):
        spec = ScenarioSpec(geo_id=geo_id, adjust_percent=adjust,
                            from_date=train_end, horizon=args.horizon,
                            label=f"{adjust:+.0f}%")
        res = run_scenario_from_artifact(spec, fit_artifact)
        final = res.scenario.cum.central[-1]
        if adjust == 0.0:
            base_final = final
        print(f"  mobility {adjust:+5.0f}% -> {final:,.0f} cumulative "
              f"({final - base_final:+,.0f} vs base)")

    print(f"\nartifacts kept under {resolve_root(manifest)}")
    print("explore them over HTTP with:")
    mpath = workdir / "manifest.json"
    with open(mpath, "w") as fh:
        json.dump({"data": {k: f"data/{k}.csv" for k in
                            ("cases", "commute", "population", "mobility",
                             "states", "census")},
                   "artifact_root": "artifacts",
                   "horizon": args.horizon, "workers": 2,
                   "fit": {"initializer_count": 6, "max_iterations": 80,
                           "top_k": 3}}, fh, indent=2)
        fh.write("\n")
    print(f"  epicast serve --manifest {mpath}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
