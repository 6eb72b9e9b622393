"""Regional epidemic forecasting from county case, death, commute, and
mobility data: cluster counties into geo-units, denoise the series, fit a
mobility-coupled compartment model with piecewise transmission, forecast
with uncertainty bands, score community risk, and replay what-if mobility
scenarios."""

__version__ = "0.1.0"

from .analytics import AnalyticsReport, RiskThresholds, build_report, risk_score
from .calibrate import FitConfig, FitData, Forecast, fit, forecast
from .geo import Clustering, build_graph, louvain
from .model import CompartmentState, DiseaseParams, MobilityCurve, build_mobility_curve
from .pipeline import ArtifactStore, Manifest, run_pipeline
from .scenarios import ScenarioSpec, run_scenario
from .series import TimeSeries

__all__ = [
    "AnalyticsReport", "ArtifactStore", "Clustering", "CompartmentState",
    "DiseaseParams", "FitConfig", "FitData", "Forecast", "Manifest",
    "MobilityCurve", "RiskThresholds", "ScenarioSpec", "TimeSeries",
    "build_graph", "build_mobility_curve", "build_report", "fit", "forecast",
    "louvain", "risk_score", "run_pipeline", "run_scenario", "__version__",
]
