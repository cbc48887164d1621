"""Weighted elastic net with per-coefficient penalty loadings.

The problem solved here is the inner building block of every robust fit in
the package:

    minimize over (mu, beta)
        (1 / (2 * sum(w))) * sum_i w_i (y_i - mu - x_i' beta)^2
        + lam * sum_j load_j * ((1 - alpha)/2 * beta_j^2 + alpha * |beta_j|)

Weights are normalized by their sum inside the objective so penalty levels
stay comparable when the weight mass changes between reweighting steps.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidDataError, InvalidParameterError

__all__ = ["Penalty", "solve_weighted_en", "en_objective", "kkt_residuals", "lambda_max"]


@dataclass(frozen=True)
class Penalty:
    """Elastic-net penalty: level, mixing weight, optional per-coefficient loadings."""

    lam: float
    alpha: float
    loadings: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise InvalidParameterError(f"lam must be >= 0, got {self.lam!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidParameterError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.loadings is not None:
            arr = np.asarray(self.loadings, dtype=float)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
                raise InvalidParameterError("loadings must be a 1-d vector of positive finite values")
            object.__setattr__(self, "loadings", arr)

    def loadings_for(self, p):
        if self.loadings is None:
            return np.ones(p)
        if self.loadings.shape[0] != p:
            raise InvalidParameterError(
                f"loadings have length {self.loadings.shape[0]}, expected {p}"
            )
        return self.loadings


def _check_problem(X, y, weights):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise InvalidDataError("X must be a 2-d array")
    n, p = X.shape
    if y.shape[0] != n:
        raise InvalidDataError(f"y has length {y.shape[0]}, expected {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidDataError("X and y must be finite")
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != n:
        raise InvalidDataError(f"weights have length {w.shape[0]}, expected {n}")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise InvalidDataError("weights must be finite and nonnegative")
    sw = w.sum()
    if sw <= 0.0:
        raise InvalidDataError("weights must not all be zero")
    return X, y, w, sw


def solve_weighted_en(X, y, weights, penalty, warm_start=None, tol=1e-8, max_sweeps=10_000):
    """Solve the weighted elastic net by cyclic coordinate descent.

    Parameters
    ----------
    X : (n, p) array
    y : (n,) array
    weights : (n,) array
        Nonnegative observation weights, not all zero.
    penalty : Penalty
    warm_start : (mu, beta) or None
        Starting point; zeros when omitted.
    tol : float
        Convergence on the maximum coefficient change, scaled by 1 + |beta_j|.
    max_sweeps : int
        Sweep cap; exceeding it raises ConvergenceError carrying the last iterate.

    Returns
    -------
    (mu, beta) : float and (p,) ndarray
    """
    X, y, w, sw = _check_problem(X, y, weights)
    n, p = X.shape
    load = penalty.loadings_for(p)
    v = w / sw
    if warm_start is None:
        mu, beta = 0.0, np.zeros(p)
    else:
        mu = float(warm_start[0])
        beta = np.array(warm_start[1], dtype=float).copy()
        if beta.shape[0] != p:
            raise InvalidDataError(f"warm start has length {beta.shape[0]}, expected {p}")
    XT = np.ascontiguousarray(X.T)
    mu, sweeps, converged = kernels.cd_solve(
        XT, y, v, float(penalty.lam), float(penalty.alpha), load, mu, beta,
        float(tol), int(max_sweeps),
    )
    if not converged:
        raise ConvergenceError(
            f"coordinate descent not converged in {sweeps} sweeps", last=(float(mu), beta)
        )
    return float(mu), beta


def en_objective(X, y, weights, penalty, mu, beta):
    """Exact objective value at (mu, beta)."""
    X, y, w, sw = _check_problem(X, y, weights)
    beta = np.asarray(beta, dtype=float)
    r = y - mu - X @ beta
    load = penalty.loadings_for(X.shape[1])
    quad = 0.5 * float((w / sw) @ r**2)
    return quad + kernels.penalty_value(beta, float(penalty.lam), float(penalty.alpha), load)


def kkt_residuals(X, y, weights, penalty, mu, beta):
    """Stationarity violations at (mu, beta).

    Returns (slack, intercept_grad): ``slack[j]`` is |gradient + lam*alpha*load_j*sign|
    for active coordinates and max(0, |gradient| - lam*alpha*load_j) for zero
    ones; ``intercept_grad`` is the absolute intercept gradient. All zero (up
    to solver tolerance) at an optimum.
    """
    X, y, w, sw = _check_problem(X, y, weights)
    beta = np.asarray(beta, dtype=float)
    load = penalty.loadings_for(X.shape[1])
    v = w / sw
    r = y - mu - X @ beta
    smooth = -(X.T * v) @ r + penalty.lam * (1.0 - penalty.alpha) * load * beta
    thr = penalty.lam * penalty.alpha * load
    active = beta != 0.0
    slack = np.where(
        active,
        np.abs(smooth + thr * np.sign(beta)),
        np.maximum(0.0, np.abs(smooth) - thr),
    )
    return slack, abs(float(v @ r))


def lambda_max(X, y, weights, alpha, loadings=None):
    """Smallest penalty level at which the weighted EN solution is all-zero.

    At beta = 0 the slope subgradient condition reads
    |sum_i v_i (y_i - mu0) x_ij| <= lam * alpha * load_j with mu0 the weighted
    mean of y, so the bound is the max over j of the left side divided by
    alpha * load_j. Undefined for alpha = 0 (the ridge solution is never
    exactly zero at finite lam).
    """
    if alpha <= 0.0 or alpha > 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1] for lambda_max, got {alpha!r}")
    X, y, w, sw = _check_problem(X, y, weights)
    v = w / sw
    load = Penalty(0.0, alpha, loadings).loadings_for(X.shape[1]) if loadings is not None else np.ones(X.shape[1])
    mu0 = float(v @ y)
    grad = X.T @ (v * (y - mu0))
    return float(np.max(np.abs(grad) / (alpha * load)))
