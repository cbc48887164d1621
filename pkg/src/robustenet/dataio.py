"""File formats: dataset CSV, truth sidecars, fit reports, metrics files.

CSV layout: header row, response column first (named y), predictors x1..xp.
Values must parse as finite floats; missing values are rejected with the
offending line number. JSON files are written with sorted keys and
repr-exact floats so identical inputs give byte-identical outputs.
"""

import dataclasses
import json
from datetime import datetime, timezone

import numpy as np

from .errors import InvalidDataError

__all__ = [
    "FORMAT_FIT",
    "FORMAT_TRUTH",
    "FORMAT_METRICS",
    "read_dataset_csv",
    "write_dataset_csv",
    "write_truth_json",
    "write_fit_report",
    "write_metrics_json",
    "write_json",
    "read_json",
]

FORMAT_FIT = "robustenet/fit-report"
FORMAT_TRUTH = "robustenet/truth"
FORMAT_METRICS = "robustenet/metrics"


def read_dataset_csv(path):
    """Parse a dataset CSV into (X, y); errors carry 1-based line numbers."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InvalidDataError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 2:
        raise InvalidDataError(f"{path}: line 1: need a response and at least one predictor column")
    width = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != width:
            raise InvalidDataError(
                f"{path}: line {lineno}: expected {width} fields, got {len(fields)}"
            )
        try:
            vals = [float(tok) for tok in fields]
        except ValueError:
            raise InvalidDataError(f"{path}: line {lineno}: non-numeric value") from None
        if not all(np.isfinite(v) for v in vals):
            raise InvalidDataError(f"{path}: line {lineno}: missing or non-finite value")
        rows.append(vals)
    if not rows:
        raise InvalidDataError(f"{path}: no data rows")
    M = np.array(rows, dtype=float)
    return M[:, 1:].copy(), M[:, 0].copy()


def write_dataset_csv(path, X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidDataError("X must be (n, p) with matching y")
    cols = ["y"] + [f"x{j + 1}" for j in range(X.shape[1])]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(y.shape[0]):
            vals = [repr(float(y[i]))] + [repr(float(v)) for v in X[i]]
            fh.write(",".join(vals) + "\n")


def _plain(obj):
    """Recursively convert to JSON-encodable values; non-finite floats become None."""
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, payload):
    """Write any JSON-encodable payload deterministically (sorted keys)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _version():
    from . import __version__

    return __version__


def write_truth_json(path, data, timestamp=False):
    """Sidecar with the generator's ground truth for later evaluation."""
    payload = {
        "format": FORMAT_TRUTH,
        "version": _version(),
        "true_coef": data.true_coef,
        "true_scale": data.true_scale,
        "contaminated_rows": data.contaminated_rows,
        "contaminated_predictors": data.contaminated_predictors,
        "good_leverage_rows": data.good_leverage_rows,
        "good_leverage_predictors": data.good_leverage_predictors,
        "config": data.config,
    }
    if timestamp:
        payload["created_at"] = datetime.now(timezone.utc).isoformat()
    write_json(path, payload)


def fit_report_payload(fit, seed_echo=None):
    """The report dictionary for a cross-validated fit (no timestamp)."""
    entries = [
        {
            "alpha": e.alpha,
            "exponent": e.exponent,
            "lam": e.lam,
            "mean": e.mean,
            "se": e.se,
            "n_reps_valid": e.n_reps_valid,
            "n_active": e.n_active,
        }
        for e in fit.entries
    ]
    prelim = None
    if fit.preliminary is not None:
        prelim = {
            "lam": fit.preliminary.lam,
            "intercept": fit.preliminary.intercept,
            "coef": fit.preliminary.coef,
        }
    return {
        "format": FORMAT_FIT,
        "version": _version(),
        "method": fit.method,
        "intercept": fit.intercept,
        "coef": fit.coef,
        "active_set": fit.active_set,
        "scale": fit.scale,
        "selected": {
            "alpha": fit.alpha,
            "exponent": fit.exponent,
            "lam": fit.lam,
            "cv_mean": fit.cv_mean,
            "cv_se": fit.cv_se,
        },
        "preliminary": prelim,
        "cv_surface": entries,
        "standardization": {
            "x_center": fit.standardization.x_center,
            "x_scale": fit.standardization.x_scale,
            "y_center": fit.standardization.y_center,
        },
        "config": fit.config,
        "seed": fit.config.seed if seed_echo is None else seed_echo,
    }


def write_fit_report(path, fit, timestamp=False):
    # no timestamp by default so repeated runs with the same seed are byte-identical
    payload = fit_report_payload(fit)
    if timestamp:
        payload["created_at"] = datetime.now(timezone.utc).isoformat()
    write_json(path, payload)


def write_metrics_json(path, metrics):
    payload = {"format": FORMAT_METRICS, "version": _version()}
    payload.update(metrics)
    write_json(path, payload)
