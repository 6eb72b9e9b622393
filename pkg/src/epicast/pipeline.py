"""End-to-end orchestration: files in, versioned JSON artifacts out.

A manifest names the input CSVs and tuning knobs.  One run clusters
counties into geo-units, aggregates their series, preprocesses each unit,
fits the transmission model (skipped while a recent enough fit artifact
exists), forecasts, and scores risk.  Units run in a bounded worker pool
and fail independently.  Artifacts are plain JSON written atomically
(temp file + rename) with deterministic bytes: payloads carry no
timestamps, freshness lives in file mtimes.
"""
from __future__ import annotations

import datetime as dt
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import geo, ingest, preprocess
from .analytics import RiskThresholds, build_report
from .calibrate import (FitConfig, FitData, artifact_to_fits, fit,
                        fit_to_artifact, forecast)
from .model import build_mobility_curve
from .series import TimeSeries

ARTIFACT_KINDS = ("preprocessed", "fit", "forecast", "risk", "analytics",
                  "scenario")


@dataclass
class Manifest:
    cases_path: Path
    commute_path: Path
    population_path: Path
    mobility_path: Path | None = None
    states_path: Path | None = None
    census_path: Path | None = None
    geo_ids: list[str] | str = "all"
    fit_config: FitConfig = field(default_factory=FitConfig)
    thresholds: RiskThresholds = field(default_factory=RiskThresholds)
    horizon: int = 28
    fit_cadence_days: float = 3.0
    workers: int = 18
    resolution: float = 1.0
    sensitivity: float = 1.0
    min_prevalence: float = preprocess.MIN_PREVALENCE
    artifact_root: Path = Path("artifacts")

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("worker limit must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for name in ("cases_path", "commute_path", "population_path",
                     "mobility_path", "states_path", "census_path"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"manifest {name}: no such file: {p}")

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        with open(path) as fh:
            obj = json.load(fh)
        base = path.parent

        def resolve(key):
            val = obj.get("data", {}).get(key)
            if val is None:
                return None
            p = Path(val)
            return p if p.is_absolute() else base / p

        root = obj.get("artifact_root", "artifacts")
        root = Path(root) if Path(root).is_absolute() else base / root
        return cls(
            cases_path=resolve("cases"),
            commute_path=resolve("commute"),
            population_path=resolve("population"),
            mobility_path=resolve("mobility"),
            states_path=resolve("states"),
            census_path=resolve("census"),
            geo_ids=obj.get("geo_ids", "all"),
            fit_config=FitConfig.from_json(obj.get("fit", {})),
            thresholds=RiskThresholds.from_json(obj.get("thresholds", {})),
            horizon=int(obj.get("horizon", 28)),
            fit_cadence_days=float(obj.get("fit_cadence_days", 3.0)),
            workers=int(obj.get("workers", 18)),
            resolution=float(obj.get("resolution", 1.0)),
            sensitivity=float(obj.get("sensitivity", 1.0)),
            min_prevalence=float(obj.get("min_prevalence",
                                         preprocess.MIN_PREVALENCE)),
            artifact_root=root)


def resolve_root(manifest: Manifest) -> Path:
    env = os.environ.get("EPICAST_DATA_ROOT")
    return Path(env) if env else Path(manifest.artifact_root)


class ArtifactStore:
    """Per-geo-unit JSON artifacts under root/<kind>/<geo_id>.json.

    Writes go through a temp file in the destination directory followed by
    an atomic rename, so concurrent readers only ever see complete files.
    Payload bytes are deterministic (sorted keys, no timestamps); artifact
    age is the file mtime.
    """

    def __init__(self, root):
        self.root = Path(root)

    def path(self, kind: str, geo_id: str) -> Path:
        if kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        return self.root / kind / f"{geo_id}.json"

    def clusters_path(self) -> Path:
        return self.root / "clusters.json"

    def _atomic_write(self, target: Path, payload: dict) -> Path:
        target.parent.mkdir(parents=True, exist_ok=True)
        data = json.dumps(payload, sort_keys=True, indent=1)
        fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target

    def write(self, kind: str, geo_id: str, payload: dict) -> Path:
        return self._atomic_write(self.path(kind, geo_id), payload)

    def read(self, kind: str, geo_id: str) -> dict:
        with open(self.path(kind, geo_id)) as fh:
            return json.load(fh)

    def exists(self, kind: str, geo_id: str) -> bool:
        return self.path(kind, geo_id).exists()

    def age_seconds(self, kind: str, geo_id: str,
                    now: float | None = None) -> float | None:
        p = self.path(kind, geo_id)
        if not p.exists():
            return None
        return (now if now is not None else time.time()) - p.stat().st_mtime

    def write_clusters(self, payload: dict) -> Path:
        return self._atomic_write(self.clusters_path(), payload)

    def read_clusters(self) -> dict:
        with open(self.clusters_path()) as fh:
            return json.load(fh)

    def list_units(self) -> list[str]:
        seen = set()
        for kind in ("forecast", "fit", "preprocessed"):
            d = self.root / kind
            if d.is_dir():
                seen.update(p.stem for p in d.glob("*.json"))
        return sorted(seen)


def preprocess_unit(geo_id: str, cum_cases: TimeSeries,
                    cum_deaths: TimeSeries | None,
                    population: float | None = None,
                    sensitivity: float = 1.0,
                    min_prevalence: float = preprocess.MIN_PREVALENCE) -> dict:
    """Denoise one unit's series and locate inflections; returns the
    preprocessed payload plus the in-memory series the fit stage needs."""
    iso = preprocess.isotonic_series(cum_cases)
    daily = preprocess.daily_from_cumulative(iso)
    smooth = preprocess.adpf_smooth(daily)
    if len(iso) >= preprocess.SEGMENT_DAYS:
        inflections = preprocess.detect_inflections(
            smooth, sensitivity=sensitivity, min_prevalence=min_prevalence)
    else:
        inflections = preprocess.InflectionSet([])
    iso_deaths = None
    if cum_deaths is not None:
        iso_deaths = preprocess.isotonic_series(cum_deaths)
    payload = {
        "geo_id": geo_id,
        "start_date": iso.start.isoformat(),
        "population": population,
        "cum_cases": iso.values.tolist(),
        "cum_deaths": None if iso_deaths is None else iso_deaths.values.tolist(),
        "smoothed_daily": smooth.values.tolist(),
        "inflections": inflections.to_json(iso.start),
    }
    return {"payload": payload, "cases": iso, "deaths": iso_deaths,
            "smoothed": smooth, "inflections": inflections}


@dataclass
class RunSummary:
    units: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(u["status"] == "ok" for u in self.units)

    def to_json(self) -> dict:
        return {"units": self.units, "ok": self.ok}


@dataclass
class _Inputs:
    cases: dict[str, TimeSeries]
    deaths: dict[str, TimeSeries]
    mobility: dict[str, TimeSeries]
    commute: ingest.CommuteTable
    population: dict[str, float]
    states: dict[str, str] | None


def load_inputs(manifest: Manifest) -> _Inputs:
    case_tables = ingest.load_cases(manifest.cases_path)
    commute = ingest.load_commute(manifest.commute_path)
    population = ingest.load_population(manifest.population_path).population
    mobility = {}
    if manifest.mobility_path is not None:
        mobility = ingest.load_mobility(manifest.mobility_path).series
    states = None
    if manifest.states_path is not None:
        states = ingest.load_states(manifest.states_path)
    return _Inputs(cases=case_tables.cases, deaths=case_tables.deaths,
                   mobility=mobility, commute=commute, population=population,
                   states=states)


def cluster_counties(manifest: Manifest, inputs: _Inputs) -> geo.Clustering:
    graph = geo.build_graph(inputs.commute.rows(),
                            state_constraint=inputs.states)
    known = set(graph.adj) | set(inputs.cases)
    for county in sorted(known):
        graph.add_node(county)
    clustering = geo.louvain(graph, resolution=manifest.resolution,
                             populations=inputs.population)
    return clustering


def _run_unit(cid: str, manifest: Manifest, store: ArtifactStore,
              clustering: geo.Clustering, inputs: _Inputs, force_fit: bool,
              now: float | None) -> dict:
    t0 = time.perf_counter()
    stages: dict[str, str] = {}
    status = {"geo_id": cid, "status": "ok", "stages": stages, "seconds": 0.0}
    try:
        population = clustering.population(cid)
        agg_cases = geo.aggregate(clustering, inputs.cases, kind="cumulative")
        agg_deaths = geo.aggregate(clustering, inputs.deaths, kind="cumulative")
        cases = agg_cases.series.get(cid)
        deaths = agg_deaths.series.get(cid)
        if cases is None:
            raise ValueError("no case data for any member county")
        mobility = None
        if inputs.mobility:
            agg_mob = geo.aggregate_mobility(clustering, inputs.mobility,
                                             inputs.population)
            mobility = agg_mob.series.get(cid)

        pre = preprocess_unit(cid, cases, deaths, population,
                              manifest.sensitivity, manifest.min_prevalence)
        store.write("preprocessed", cid, pre["payload"])
        stages["preprocess"] = "ok"

        age = store.age_seconds("fit", cid, now)
        cadence = manifest.fit_cadence_days * 86400.0
        if not force_fit and age is not None and age < cadence:
            artifact = store.read("fit", cid)
            stages["fit"] = "skipped"
        else:
            curve = None
            if mobility is not None:
                curve = build_mobility_curve(mobility).aligned_to(pre["cases"].start)
            data = FitData(geo_id=cid, cases=pre["cases"], deaths=pre["deaths"],
                           population=population)
            results = fit(data, pre["inflections"].days, manifest.fit_config,
                          curve)
            artifact = fit_to_artifact(results, manifest.fit_config, mobility,
                                       [float(d) for d in pre["inflections"].days],
                                       data.observed())
            store.write("fit", cid, artifact)
            stages["fit"] = "ok"

        fits, curve = artifact_to_fits(artifact)
        fcast = forecast(fits, manifest.horizon, curve,
                         k=manifest.fit_config.top_k,
                         loss_ratio=manifest.fit_config.loss_ratio)
        store.write("forecast", cid, fcast.to_json())
        stages["forecast"] = "ok"

        report = build_report(None, fcast, pre["cases"], population,
                              manifest.thresholds)
        store.write("analytics", cid, report.to_json())
        store.write("risk", cid, {
            "geo_id": cid,
            "current_risk": report.current_risk,
            "projected_risks": report.projected_risks,
            "thresholds": manifest.thresholds.to_json(),
        })
        stages["risk"] = "ok"
    except Exception as exc:   # noqa: BLE001 - unit isolation by design
        status["status"] = "failed"
        status["error"] = f"{type(exc).__name__}: {exc}"
    status["seconds"] = round(time.perf_counter() - t0, 3)
    return status


def run_pipeline(manifest: Manifest, force_fit: bool = False,
                 now: float | None = None) -> RunSummary:
    """Execute every stage for every selected geo-unit.

    Units run with at most ``manifest.workers`` in flight; a unit failure is
    recorded in the summary and never aborts the others.  A fit artifact
    younger than the cadence is reused unless ``force_fit`` is set; risk and
    forecast are always recomputed.
    """
    store = ArtifactStore(resolve_root(manifest))
    inputs = load_inputs(manifest)
    clustering = cluster_counties(manifest, inputs)
    store.write_clusters(clustering.to_json())

    wanted = sorted(clustering.clusters)
    if manifest.geo_ids != "all":
        missing = [g for g in manifest.geo_ids if g not in clustering.clusters]
        if missing:
            raise ValueError(f"manifest geo_ids not in clustering: {missing}")
        wanted = list(manifest.geo_ids)

    summary = RunSummary()
    with ThreadPoolExecutor(max_workers=manifest.workers) as pool:
        futures = [pool.submit(_run_unit, cid, manifest, store, clustering,
                               inputs, force_fit, now) for cid in wanted]
        for fut in futures:
            summary.units.append(fut.result())
    summary.units.sort(key=lambda u: u["geo_id"])
    return summary
