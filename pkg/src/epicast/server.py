"""HTTP read layer over the artifact store, plus synchronous what-if runs.

All GET endpoints serve stored JSON artifacts verbatim; nothing is
computed on read.  POST /scenario is the one live operation: it validates
the request, replays the stored fit under adjusted mobility, persists the
result, and returns it.  A built frontend directory, when present, is
mounted at the root path.
"""
from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .pipeline import ArtifactStore
from .scenarios import ScenarioError, ScenarioSpec, run_scenario_from_artifact

SERVED_KINDS = ("preprocessed", "fit", "forecast", "risk", "analytics")


def _not_found(kind: str, geo_id: str) -> JSONResponse:
    return JSONResponse(
        status_code=404,
        content={"error": "not_found",
                 "detail": f"no {kind} artifact for geo unit {geo_id!r}"})


def _invalid(fields: dict[str, str]) -> JSONResponse:
    return JSONResponse(status_code=422,
                        content={"error": "validation", "fields": fields})


def _scenario_fields(body) -> dict[str, str]:
    """Field-by-field validation so the caller learns everything wrong at
    once, not just the first bad key."""
    if not isinstance(body, dict):
        return {"body": "request body must be a JSON object"}
    fields: dict[str, str] = {}
    geo_id = body.get("geo_id")
    if not isinstance(geo_id, str) or not geo_id:
        fields["geo_id"] = "required: non-empty string"
    adjust = body.get("adjust")
    if not isinstance(adjust, (int, float)) or isinstance(adjust, bool):
        fields["adjust"] = "required: number between -100 and 100"
    elif not -100.0 <= float(adjust) <= 100.0:
        fields["adjust"] = f"must be between -100 and 100, got {adjust}"
    raw_from = body.get("from")
    if not isinstance(raw_from, str):
        fields["from"] = "required: ISO date string (YYYY-MM-DD)"
    else:
        try:
            dt.date.fromisoformat(raw_from)
        except ValueError:
            fields["from"] = f"not an ISO date: {raw_from!r}"
    horizon = body.get("horizon", 28)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        fields["horizon"] = "must be a positive integer"
    label = body.get("label", "")
    if not isinstance(label, str):
        fields["label"] = "must be a string"
    return fields


def create_app(store: ArtifactStore,
               frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="epicast", docs_url=None, redoc_url=None)

    def artifact_response(kind: str, geo_id: str) -> JSONResponse:
        try:
            return JSONResponse(store.read(kind, geo_id))
        except FileNotFoundError:
            return _not_found(kind, geo_id)
        except json.JSONDecodeError:
            return JSONResponse(status_code=500,
                                content={"error": "corrupt_artifact",
                                         "detail": f"{kind}/{geo_id}"})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/geo-units")
    def geo_units():
        populations: dict[str, float] = {}
        try:
            doc = store.read_clusters()
            populations = {e["id"]: e["population"]
                           for e in doc.get("clusters", [])}
        except FileNotFoundError:
            pass
        ids = sorted(set(store.list_units()) | set(populations))
        units = []
        for uid in ids:
            ages = {}
            for kind in SERVED_KINDS:
                age = store.age_seconds(kind, uid)
                ages[kind] = None if age is None else round(age, 3)
            units.append({"id": uid, "population": populations.get(uid),
                          "artifacts": ages})
        return {"units": units}

    @app.get("/forecast/{geo_id}")
    def get_forecast(geo_id: str):
        return artifact_response("forecast", geo_id)

    @app.get("/risk/{geo_id}")
    def get_risk(geo_id: str):
        return artifact_response("risk", geo_id)

    @app.get("/analytics/{geo_id}")
    def get_analytics(geo_id: str):
        return artifact_response("analytics", geo_id)

    @app.post("/scenario")
    async def post_scenario(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _invalid({"body": "request body must be JSON"})
        fields = _scenario_fields(body)
        if fields:
            return _invalid(fields)
        spec = ScenarioSpec.from_json(
            {**body, "horizon": body.get("horizon", 28)})
        if not store.exists("fit", spec.geo_id):
            return _not_found("fit", spec.geo_id)
        artifact = store.read("fit", spec.geo_id)
        try:
            result = run_scenario_from_artifact(spec, artifact)
        except ScenarioError as exc:
            return _invalid({"from": str(exc)})
        payload = result.to_json()
        store.write("scenario", spec.geo_id, payload)
        return JSONResponse(payload)

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="frontend")
    return app


def default_frontend_dir() -> Path | None:
    """Locate the built UI next to an installed or checked-out package."""
    here = Path(__file__).resolve()
    for base in (here.parents[2], here.parents[3] if len(here.parents) > 3 else None):
        if base is None:
            continue
        candidate = base / "frontend" / "dist"
        if candidate.is_dir():
            return candidate
    return None


def serve(store_root: str | Path, bind: str = "127.0.0.1:8080",
          frontend_dir: str | Path | None = None) -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    if frontend_dir is None:
        frontend_dir = default_frontend_dir()
    app = create_app(ArtifactStore(store_root), frontend_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8080"),
                log_level="info")
