"""Evaluation metrics for variable selection and prediction accuracy."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDataError, InvalidParameterError
from .scales import tau_scale

__all__ = [
    "ConfusionCounts",
    "confusion_counts",
    "mcc",
    "sensitivity_specificity",
    "relative_prediction_performance",
    "prediction_tau_ratio",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Selection confusion matrix over predictors."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise InvalidParameterError("confusion counts must be non-negative")


def confusion_counts(estimated_coef, true_coef):
    """Confusion matrix of nonzero-pattern recovery, optionally on a predictor subset.

    Both arguments are coefficient vectors; a predictor counts as selected or
    relevant when its entry is nonzero.
    """
    est = np.asarray(estimated_coef, dtype=float).ravel() != 0.0
    tru = np.asarray(true_coef, dtype=float).ravel() != 0.0
    if est.shape != tru.shape:
        raise InvalidDataError(f"coefficient vectors disagree in length: {est.size} vs {tru.size}")
    return ConfusionCounts(
        tp=int(np.sum(est & tru)),
        tn=int(np.sum(~est & ~tru)),
        fp=int(np.sum(est & ~tru)),
        fn=int(np.sum(~est & tru)),
    )


def mcc(counts):
    """Matthews correlation coefficient; 0 when any denominator factor vanishes."""
    tp, tn, fp, fn = counts.tp, counts.tn, counts.fp, counts.fn
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return float((tp * tn - fp * fn) / np.sqrt(denom))


def sensitivity_specificity(counts):
    """(TP/(TP+FN), TN/(TN+FP)); an empty class scores 1 (vacuously perfect)."""
    pos = counts.tp + counts.fn
    neg = counts.tn + counts.fp
    sens = counts.tp / pos if pos > 0 else 1.0
    spec = counts.tn / neg if neg > 0 else 1.0
    return float(sens), float(spec)


def relative_prediction_performance(tau_m, tau_ref):
    """Sign-symmetric relative error-scale of a method against a reference.

    Positive values mean the method's prediction-error scale is that fraction
    larger than the reference's; negative values mean the reference is worse.
    Exactly antisymmetric: rpp(a, b) == -rpp(b, a).
    """
    if tau_m <= 0.0 or tau_ref <= 0.0:
        raise InvalidParameterError("error scales must be positive")
    if tau_ref <= tau_m:
        return float(tau_m / tau_ref - 1.0)
    return float(-tau_ref / tau_m + 1.0)


def prediction_tau_ratio(predictions, responses, true_scale, tau_cutoff=3.0):
    """tau-scale of the prediction errors relative to the true error scale."""
    if true_scale <= 0.0:
        raise InvalidParameterError("true_scale must be positive")
    predictions = np.asarray(predictions, dtype=float).ravel()
    responses = np.asarray(responses, dtype=float).ravel()
    if predictions.shape != responses.shape:
        raise InvalidDataError(
            f"predictions and responses disagree in length: {predictions.size} vs {responses.size}"
        )
    return tau_scale(responses - predictions, cutoff=tau_cutoff) / true_scale
