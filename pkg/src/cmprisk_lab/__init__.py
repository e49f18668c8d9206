"""cmprisk-lab: competing-risk survival toolkit and simulation benchmark.

Submodules
----------
data        sample container, step functions, CSV IO
nonparam    KM / reverse-KM / Nelson-Aalen / Aalen-Johansen + conversions
ipcw        inverse-probability-of-censoring weights
psdh        weighted subdistribution partial likelihood internals
penalized   LASSO / SCAD / MCP coordinate descent, paths, BIC selection
boosting    likelihood-based componentwise boosting with CV stopping
forest      competing-risk random forest (log-rank / Gray splitting)
deephit     discrete-time softmax network with ranking penalty
simulate    Fine-Gray style data generator and the scenario grid
metrics     selection / ranking / calibration metrics at a horizon
bench       config-driven benchmark runner, aggregation, external fits
report      matplotlib figure rendering for bench outputs
cli         ``bench`` entry point
"""

from .data import Dataset, SchemaError, StepFunction, SubjectRecord, ValidationError, load_csv, write_csv
from .nonparam import (aalen_johansen_cif, censoring_survival, cif_from_csh,
                       cif_from_sdh, csh_from_sdh_two_events,
                       km_event_free_survival, nelson_aalen_csh)
from .penalized import FitResult, PenaltySpec, fit, fit_path, select_bic
from .boosting import BoostConfig, BoostTrace, boost_fit, choose_steps_cv
from .forest import ForestConfig, fit_forest, predict_cif, variable_importance
from .deephit import NetConfig, discretize, train
from .simulate import ScenarioSpec, generate, full_grid
from .metrics import MetricsReport, auc_t, beta_error, brier_t, cindex, ibs_t, tpr_fdr

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SubjectRecord", "StepFunction", "SchemaError",
    "ValidationError", "load_csv", "write_csv",
    "km_event_free_survival", "censoring_survival", "nelson_aalen_csh",
    "aalen_johansen_cif", "cif_from_csh", "cif_from_sdh",
    "csh_from_sdh_two_events",
    "PenaltySpec", "FitResult", "fit", "fit_path", "select_bic",
    "BoostConfig", "BoostTrace", "boost_fit", "choose_steps_cv",
    "ForestConfig", "fit_forest", "predict_cif", "variable_importance",
    "NetConfig", "discretize", "train",
    "ScenarioSpec", "generate", "full_grid",
    "MetricsReport", "tpr_fdr", "beta_error", "cindex", "auc_t", "brier_t",
    "ibs_t",
    "__version__",
]
