"""Shared fixtures: the synthetic two-cluster demo dataset and one full
pipeline run over it, both session-scoped because fitting is the slow part."""
from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from epicast.analytics import RiskThresholds
from epicast.calibrate import FitConfig
from epicast.pipeline import ArtifactStore, Manifest, run_pipeline
from epicast.synthetic import demo_dataset

settings.register_profile(
    "suite", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

# Small but adequate: the deterministic data-aware start converges on the
# demo units, the random starts are backup.  Full-size configs are exercised
# by the acceptance suite.
DEMO_FIT = FitConfig(initializer_count=6, max_iterations=80, seed=0, top_k=3)


@pytest.fixture(scope="session")
def demo(tmp_path_factory):
    """Input CSVs for a synthetic two-cluster region plus the ground truth."""
    outdir = tmp_path_factory.mktemp("demo_data")
    meta = demo_dataset(outdir)
    meta["dir"] = outdir
    return meta


def demo_manifest(demo, root, **overrides) -> Manifest:
    base = dict(
        cases_path=demo["dir"] / "cases.csv",
        commute_path=demo["dir"] / "commute.csv",
        population_path=demo["dir"] / "population.csv",
        mobility_path=demo["dir"] / "mobility.csv",
        states_path=demo["dir"] / "states.csv",
        census_path=demo["dir"] / "census.csv",
        fit_config=DEMO_FIT,
        thresholds=RiskThresholds(),
        horizon=28,
        workers=2,
        artifact_root=root,
    )
    base.update(overrides)
    return Manifest(**base)


@pytest.fixture(scope="session")
def demo_run(demo, tmp_path_factory):
    """One full pipeline run over the demo dataset (the expensive fixture)."""
    root = tmp_path_factory.mktemp("demo_artifacts")
    manifest = demo_manifest(demo, root)
    summary = run_pipeline(manifest)
    return {"manifest": manifest, "root": root, "store": ArtifactStore(root),
            "summary": summary, "demo": demo}
