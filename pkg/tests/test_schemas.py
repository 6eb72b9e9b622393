"""Published JSON artifact schemas: loaders, self-validity, payload checks.

Each schema must (a) be a valid draft 2020-12 document, (b) accept what the
library's own writers emit, and (c) reject structurally broken payloads.
The full writer-side check against pipeline output lives with the pipeline
tests; here the payloads are small and hand-built.
"""
import copy
import datetime as dt

import jsonschema
import numpy as np
import pytest

from epicast import geo
from epicast.calibrate import Band, Forecast
from epicast.model import CompartmentState, DiseaseParams
from epicast.scenarios import ScenarioResult, ScenarioSpec
from epicast.schemas import (SCHEMA_DIR, SCHEMA_KINDS, load_schema,
                             validate_artifact)

START = dt.date(2020, 3, 1)


def make_params_json():
    return DiseaseParams.single_segment(1e6, 0.3, 0.35, 0.02, 0.05,
                                        0.2, 0.1, 0.1, 0.07).to_json()


def make_state_json():
    return CompartmentState(S=9e5, Y=0.0, A=10.0, C=10.0, I=10.0,
                            W=0.0, R=1e5 - 30.0, D=0.0).to_json()


def make_band(n=3):
    return {"central": [float(i) for i in range(n)],
            "lower": [0.0] * n,
            "upper": [float(2 * i) for i in range(n)]}


def make_forecast_json(n=3):
    return {
        "geo_id": "c0",
        "dates": [(START + dt.timedelta(days=i)).isoformat() for i in range(n)],
        "train_days": 45,
        "horizon": 14,
        "daily_cases": make_band(n),
        "cum_cases": make_band(n),
        "cum_deaths": make_band(n),
        "params": make_params_json(),
        "s_fractions": [{"t": 0.0, "fraction": 0.9}],
    }


VALID = {
    "clusters": lambda: {"clusters": [
        {"id": "c0", "counties": ["06001", "06013"], "population": 2.5e6},
        {"id": "c1", "counties": ["06075"], "population": 0.9e6},
    ]},
    "preprocessed": lambda: {
        "geo_id": "c0", "start_date": "2020-03-01", "population": 1e6,
        "cum_cases": [0.0, 2.0, 5.0], "cum_deaths": None,
        "smoothed_daily": [0.0, 1.5, 2.5],
        "inflections": [{"day": 1, "date": "2020-03-02", "kind": "knee",
                         "significance": 0.4}],
    },
    "fit": lambda: {
        "geo_id": "c0", "start_date": "2020-03-01", "train_days": 45,
        "population": 1e6, "params": make_params_json(), "breakpoints": [],
        "breakpoint_estimates": [], "loss": 0.01, "nrmse": {"cum": 0.01},
        "initial_state": make_state_json(), "cum_offset": 100.0,
        "diagnostics": {"start": 0},
        "alternates": [{"params": make_params_json(), "loss": 0.02,
                        "initial_state": make_state_json()}],
        "observed": {"cum_cases": [100.0, 110.0], "cum_deaths": None},
        "mobility_index": {"geo_id": "c0", "start": "2020-03-01",
                           "values": [100.0, 90.0]},
        "config": {"seed": 0},
    },
    "forecast": make_forecast_json,
    "risk": lambda: {
        "geo_id": "c0", "current_risk": 3, "projected_risks": [3, 4, 4],
        "thresholds": {"kappa": 10.0, "lambda": 5.0, "tau": 2.0},
    },
    "analytics": lambda: {
        "geo_id": "c0", "r0": 3.2,
        "r_eff": [{"t": 0.0, "date": "2020-03-01", "value": 3.2}],
        "r_t": 1.1, "growth_rate": 0.02, "doubling_time": 34.7,
        "not_doubling": False, "current_risk": 3,
        "projected_risks": [3, 3, 4],
        "thresholds": {"kappa": 10.0, "lambda": 5.0, "tau": 2.0},
    },
    "scenario": lambda: {
        "spec": {"geo_id": "c0", "adjust": -5.0, "from": "2020-04-10",
                 "horizon": 14, "label": ""},
        "base": make_forecast_json(),
        "scenario": make_forecast_json(),
    },
}


class TestLoader:
    def test_every_kind_has_a_file_and_vice_versa(self):
        files = {p.name.removesuffix(".schema.json")
                 for p in SCHEMA_DIR.glob("*.schema.json")}
        assert files == set(SCHEMA_KINDS)

    @pytest.mark.parametrize("kind", SCHEMA_KINDS)
    def test_schema_is_valid_2020_12(self, kind):
        schema = load_schema(kind)
        assert schema["$id"] == f"epicast/{kind}"
        assert schema["$schema"] == "https://json-schema.org/draft/2020-12/schema"
        jsonschema.Draft202012Validator.check_schema(schema)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown schema kind"):
            load_schema("bogus")

    def test_loader_caches(self):
        assert load_schema("fit") is load_schema("fit")


class TestValidPayloads:
    @pytest.mark.parametrize("kind", SCHEMA_KINDS)
    def test_hand_built_payload_conforms(self, kind):
        validate_artifact(kind, VALID[kind]())

    def test_cluster_writer_output_conforms(self):
        graph = geo.build_graph([("06001", "06013", 5.0),
                                 ("06013", "06075", 4.0)])
        clustering = geo.louvain(graph, populations={"06001": 1.0e6,
                                                     "06013": 1.1e6,
                                                     "06075": 0.9e6})
        validate_artifact("clusters", clustering.to_json())

    def test_forecast_writer_output_conforms(self):
        band = Band(np.array([1.0, 2.0]), np.array([0.5, 1.5]),
                    np.array([2.0, 3.0]))
        fc = Forecast(geo_id="c0", start=START, train_days=45, horizon=2,
                      daily=band, cum=band, deaths=band,
                      params=DiseaseParams.from_json(make_params_json()),
                      s_fractions=[(0.0, 0.9)])
        validate_artifact("forecast", fc.to_json())

    def test_scenario_writer_output_conforms(self):
        band = Band(np.array([1.0, 2.0]), np.array([0.5, 1.5]),
                    np.array([2.0, 3.0]))
        fc = Forecast(geo_id="c0", start=START, train_days=45, horizon=2,
                      daily=band, cum=band, deaths=band,
                      params=DiseaseParams.from_json(make_params_json()),
                      s_fractions=[(0.0, 0.9)])
        spec = ScenarioSpec("c0", -5.0, START + dt.timedelta(days=40), 14)
        validate_artifact("scenario", ScenarioResult(spec, fc, fc).to_json())

    def test_nullable_fields_accept_null(self):
        pre = VALID["preprocessed"]()
        pre["population"] = None
        validate_artifact("preprocessed", pre)
        ana = VALID["analytics"]()
        ana["growth_rate"] = None
        ana["doubling_time"] = None
        ana["not_doubling"] = True
        validate_artifact("analytics", ana)
        art = VALID["fit"]()
        art["mobility_index"] = None
        validate_artifact("fit", art)


def broken_cases():
    """(kind, mutation description, mutator) triples; each must fail."""
    def drop(key):
        def go(p):
            del p[key]
        return go

    def put(key, value):
        def go(p):
            p[key] = value
        return go

    cases = [
        ("clusters", "empty county list",
         lambda p: p["clusters"][0].update(counties=[])),
        ("clusters", "negative population",
         lambda p: p["clusters"][0].update(population=-1.0)),
        ("clusters", "stray key",
         lambda p: p["clusters"][0].update(extra=1)),
        ("clusters", "missing id",
         lambda p: p["clusters"][0].pop("id")),
        ("preprocessed", "unknown inflection kind",
         lambda p: p["inflections"][0].update(kind="peak")),
        ("preprocessed", "negative day",
         lambda p: p["inflections"][0].update(day=-1)),
        ("preprocessed", "negative cumulative count",
         put("cum_cases", [-1.0])),
        ("preprocessed", "missing smoothed series", drop("smoothed_daily")),
        ("fit", "training window below minimum", put("train_days", 20)),
        ("fit", "missing observed block", drop("observed")),
        ("fit", "params missing a rate",
         lambda p: p["params"].pop("rho")),
        ("fit", "state with stray compartment",
         lambda p: p["initial_state"].update(X=1.0)),
        ("fit", "alternate missing loss",
         lambda p: p["alternates"][0].pop("loss")),
        ("fit", "negative loss", put("loss", -0.5)),
        ("forecast", "susceptible fraction above one",
         lambda p: p["s_fractions"][0].update(fraction=1.5)),
        ("forecast", "no dates", put("dates", [])),
        ("forecast", "band missing upper arm",
         lambda p: p["daily_cases"].pop("upper")),
        ("forecast", "zero horizon", put("horizon", 0)),
        ("risk", "risk level zero", put("current_risk", 0)),
        ("risk", "risk level seven", put("current_risk", 7)),
        ("risk", "too few projections", put("projected_risks", [3, 4])),
        ("risk", "missing tau",
         lambda p: p["thresholds"].pop("tau")),
        ("analytics", "zero doubling time", put("doubling_time", 0)),
        ("analytics", "non-boolean flag", put("not_doubling", "yes")),
        ("analytics", "r_eff entry without date",
         lambda p: p["r_eff"][0].pop("date")),
        ("scenario", "adjustment beyond -100",
         lambda p: p["spec"].update(adjust=-150.0)),
        ("scenario", "stray key in spec",
         lambda p: p["spec"].update(notes="x")),
        ("scenario", "broken nested forecast",
         lambda p: p["base"].update(horizon=0)),
        ("scenario", "missing base forecast", drop("base")),
    ]
    return [pytest.param(kind, mutate, id=f"{kind}-{desc.replace(' ', '-')}")
            for kind, desc, mutate in cases]


class TestBrokenPayloads:
    @pytest.mark.parametrize("kind,mutate", broken_cases())
    def test_rejected(self, kind, mutate):
        payload = copy.deepcopy(VALID[kind]())
        mutate(payload)
        with pytest.raises(jsonschema.ValidationError):
            validate_artifact(kind, payload)

    @pytest.mark.parametrize("kind", SCHEMA_KINDS)
    def test_top_level_stray_key_rejected(self, kind):
        payload = copy.deepcopy(VALID[kind]())
        payload["unexpected"] = 1
        with pytest.raises(jsonschema.ValidationError):
            validate_artifact(kind, payload)
