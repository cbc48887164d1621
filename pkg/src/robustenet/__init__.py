"""Robust regularized regression: penalized S-estimators with adaptive
elastic-net penalties, robust cross-validation, synthetic contamination
scenarios and evaluation metrics.

Submodules are imported lazily so process-level knobs (like the worker
thread count, which must be fixed before the compiled kernels load) can be
set by entry points before any heavy import happens.
"""

import importlib

__version__ = "0.1.0"

from .errors import (  # noqa: F401  (light import, no numerics)
    ConvergenceError,
    ExactFitError,
    InvalidDataError,
    InvalidParameterError,
    InvalidPreliminaryError,
)

_EXPORTS = {
    # bounded loss family
    "rho": ".bisquare",
    "psi": ".bisquare",
    "psi_prime": ".bisquare",
    "varphi": ".bisquare",
    "consistency_cutoff": ".bisquare",
    # robust scale / location estimators
    "lower_median": ".scales",
    "m_scale": ".scales",
    "tau_scale": ".scales",
    "m_location": ".scales",
    # weighted elastic net
    "Penalty": ".enet",
    "solve_weighted_en": ".enet",
    "en_objective": ".enet",
    "kkt_residuals": ".enet",
    "lambda_max": ".enet",
    # penalized S-estimator core
    "FitResult": ".sestimator",
    "PathConfig": ".sestimator",
    "s_objective": ".sestimator",
    "mm_weights": ".sestimator",
    "mm_descend": ".sestimator",
    "intercept_only_fit": ".sestimator",
    "s_lambda_max": ".sestimator",
    "default_lambda_grid": ".sestimator",
    "adaptive_loadings": ".sestimator",
    "en_py_initial_estimates": ".sestimator",
    "s_enet_path": ".sestimator",
    "fit_at": ".sestimator",
    "breakdown_probe": ".sestimator",
    # cross-validated fitting
    "StandardizationRecord": ".cv",
    "standardize": ".cv",
    "standardize_classical": ".cv",
    "CvConfig": ".cv",
    "CvEntry": ".cv",
    "PreliminaryModel": ".cv",
    "CvFit": ".cv",
    "repeated_kfold": ".cv",
    "select_min": ".cv",
    "select_one_se": ".cv",
    "fit_adaptive_s_enet_cv": ".cv",
    "fit_s_enet_cv": ".cv",
    "fit_ls_enet_cv": ".cv",
    "fit_path": ".cv",
    # synthetic data
    "ScenarioConfig": ".simdata",
    "GeneratedData": ".simdata",
    "sample_stable": ".simdata",
    "generate": ".simdata",
    "generate_scenario_one": ".simdata",
    "generate_alternative_scenario": ".simdata",
    "generate_good_leverage_example": ".simdata",
    # metrics
    "ConfusionCounts": ".metrics",
    "confusion_counts": ".metrics",
    "mcc": ".metrics",
    "sensitivity_specificity": ".metrics",
    "relative_prediction_performance": ".metrics",
    "prediction_tau_ratio": ".metrics",
    # file formats
    "read_dataset_csv": ".dataio",
    "write_dataset_csv": ".dataio",
    "write_truth_json": ".dataio",
    "write_fit_report": ".dataio",
    "write_metrics_json": ".dataio",
    "read_json": ".dataio",
}

__all__ = sorted(_EXPORTS) + [
    "ConvergenceError",
    "ExactFitError",
    "InvalidDataError",
    "InvalidParameterError",
    "InvalidPreliminaryError",
    "__version__",
]


def __getattr__(name):
    target = _EXPORTS.get(name)
    if target is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(importlib.import_module(target, __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
