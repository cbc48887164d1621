"""Penalized S-estimators of regression.

The estimator minimizes the squared M-scale of the residuals plus an
elastic-net penalty (optionally with per-coefficient loadings). The objective
is non-convex, so a fit is the best result of an iteratively reweighted
descent started from many candidate estimates:

* candidate starts come from a leave-one-out sensitivity analysis
  (:func:`en_py_initial_estimates`) pooled over a subset of the penalty grid,
  plus the intercept-only model, plus warm starts carried along the grid;
* every start gets a few cheap descent steps at each penalty level, the most
  promising few are iterated to convergence, and the winners seed the next
  level.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .enet import Penalty, solve_weighted_en
from .errors import (
    ConvergenceError,
    ExactFitError,
    InvalidDataError,
    InvalidParameterError,
    InvalidPreliminaryError,
)

__all__ = [
    "FitResult",
    "PathConfig",
    "s_objective",
    "mm_weights",
    "mm_descend",
    "intercept_only_fit",
    "s_lambda_max",
    "default_lambda_grid",
    "adaptive_loadings",
    "en_py_initial_estimates",
    "s_enet_path",
    "fit_at",
    "breakdown_probe",
]


@dataclass
class FitResult:
    """One fitted model: location/slopes, residual M-scale, and bookkeeping.

    ``scale`` is the cutoff-1 M-scale entering the objective;
    ``objective == scale**2 + penalty(coef)`` always holds (penalty alone when
    the fit is degenerate, i.e. scale is exactly 0).
    """

    intercept: float
    coef: np.ndarray
    scale: float
    objective: float
    iterations: int
    converged: bool = True
    degenerate: bool = False
    lam: float | None = None

    @property
    def active_set(self):
        return np.flatnonzero(self.coef)

    def predict(self, X):
        return self.intercept + np.asarray(X, dtype=float) @ self.coef


@dataclass
class PathConfig:
    """Knobs of the penalty-grid descent strategy."""

    lambdas: np.ndarray
    explore_iterations: int = 5
    keep_best: int = 10
    initial_stride: int = 10
    mm_tol: float = 1e-6
    mm_max_iter: int = 500
    cd_tol: float = 1e-8
    cd_max_sweeps: int = 10_000
    scale_rtol: float = 1e-9
    scale_max_iter: int = 200

    def __post_init__(self):
        lams = np.asarray(self.lambdas, dtype=float).ravel()
        if lams.size == 0 or np.any(lams <= 0.0) or not np.all(np.isfinite(lams)):
            raise InvalidParameterError("lambdas must be positive and finite")
        if lams.size > 1 and np.any(np.diff(lams) >= 0.0):
            raise InvalidParameterError("lambdas must be strictly decreasing")
        self.lambdas = lams
        if self.explore_iterations < 1 or self.keep_best < 1 or self.initial_stride < 1:
            raise InvalidParameterError("explore_iterations, keep_best, initial_stride must be >= 1")


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidDataError("X must be (n, p) with matching y")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidDataError("X and y must be finite")
    return X, y


def s_objective(X, y, intercept, coef, penalty, bdp=0.25):
    """Squared residual M-scale plus penalty at the given parameters."""
    X, y = _check_xy(X, y)
    coef = np.asarray(coef, dtype=float)
    r = y - intercept - X @ coef
    s = kernels.m_scale(r, float(bdp), 1e-9, 200)
    load = penalty.loadings_for(X.shape[1])
    return s * s + kernels.penalty_value(coef, float(penalty.lam), float(penalty.alpha), load)


def mm_weights(residuals, scale, cutoff=1.0):
    """Descent weights psi(r/scale)/(r/scale) for the bisquare family.

    The weight is continuous with value psi'(0) = 6/cutoff^2 at a zero
    residual and zero beyond the cutoff. Raises ExactFitError on scale 0.
    """
    if scale == 0.0:
        raise ExactFitError("residual M-scale is zero; weights are undefined")
    r = np.asarray(residuals, dtype=float)
    out = np.empty(r.shape[0])
    kernels.loss_weights(r, float(scale * cutoff), out)
    return out / cutoff**2


def mm_descend(X, y, penalty, start, bdp=0.25, mm_tol=1e-6, mm_max_iter=500,
               cd_tol=1e-8, cd_max_sweeps=10_000, return_trace=False):
    """Iterate (reweight -> weighted EN -> rescale) from ``start`` = (mu, beta).

    The objective never increases along the iteration (a step that would
    increase it is rejected and the previous iterate returned). Stops on
    relative objective change below ``mm_tol`` or after ``mm_max_iter`` steps.
    """
    X, y = _check_xy(X, y)
    p = X.shape[1]
    load = penalty.loadings_for(p)
    mu = float(start[0])
    beta = np.array(start[1], dtype=float).copy()
    if beta.shape[0] != p:
        raise InvalidDataError(f"start has {beta.shape[0]} slopes, expected {p}")
    XT = np.ascontiguousarray(X.T)
    trace = np.empty(mm_max_iter + 1)
    mu, s, obj, steps, status = kernels.mm_fit(
        XT, y, float(penalty.lam), float(penalty.alpha), load, float(bdp),
        mu, beta, int(mm_max_iter), float(mm_tol), float(cd_tol), int(cd_max_sweeps),
        1e-9, 200, trace,
    )
    fit = FitResult(
        intercept=float(mu), coef=beta, scale=float(s), objective=float(obj),
        iterations=int(steps), converged=status != kernels.MM_MAX_ITER,
        degenerate=status == kernels.MM_DEGENERATE, lam=float(penalty.lam),
    )
    if return_trace:
        return fit, trace[: steps + 1].copy()
    return fit


def intercept_only_fit(y, bdp=0.25, tol=1e-10, max_iter=300):
    """Minimize the residual M-scale over a location parameter alone.

    Returns (location, scale). Reweighted-mean iteration with the same
    safeguard as the full descent: a step that raises the scale is rejected.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0 or not np.all(np.isfinite(y)):
        raise InvalidDataError("y must be nonempty and finite")
    k = (y.size + 1) // 2 - 1
    mu = float(np.partition(y, k)[k])
    s = kernels.m_scale(y - mu, float(bdp), 1e-9, 200)
    if s == 0.0:
        return mu, 0.0
    w = np.empty(y.size)
    for _ in range(max_iter):
        kernels.loss_weights(y - mu, s, w)
        sw = w.sum()
        if sw <= 0.0:
            break
        mu_new = float(w @ y / sw)
        s_new = kernels.m_scale(y - mu_new, float(bdp), 1e-9, 200)
        if s_new > s * (1.0 + 1e-15):
            break
        moved = abs(mu_new - mu)
        mu, s = mu_new, s_new
        if s == 0.0 or moved <= tol * (s + abs(mu)):
            break
    return mu, s


def s_lambda_max(X, y, alpha, loadings=None, bdp=0.25):
    """Smallest penalty level at which the all-zero slope vector is a fixed point.

    Derived from the descent majorizer anchored at the intercept-only model:
    with weights w and standardized residuals z there, the zero vector
    satisfies the subgradient condition iff
    lam >= max_j |sum_i w_i (y_i - mu0) x_ij| / (0.5 sum_i w_i z_i^2 * alpha * load_j).
    """
    if alpha <= 0.0 or alpha > 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1] for s_lambda_max, got {alpha!r}")
    X, y = _check_xy(X, y)
    n, p = X.shape
    load = np.ones(p) if loadings is None else np.asarray(loadings, dtype=float)
    mu0, s0 = intercept_only_fit(y, bdp)
    if s0 == 0.0:
        raise ExactFitError("response is constant on more than a 1-bdp fraction")
    w = mm_weights(y - mu0, s0)
    phisum = float(w @ ((y - mu0) / s0) ** 2)
    grad = X.T @ (w * (y - mu0)) / (0.5 * phisum)
    return float(np.max(np.abs(grad) / (alpha * load)))


def default_lambda_grid(head, count=50, ratio=1e-3):
    """Log-spaced, strictly decreasing penalty grid from ``head`` to ``head*ratio``."""
    if head <= 0.0 or not np.isfinite(head):
        raise InvalidParameterError(f"grid head must be positive, got {head!r}")
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    if not (0.0 < ratio < 1.0):
        raise InvalidParameterError("ratio must lie in (0, 1)")
    if count == 1:
        return np.array([head])
    return np.geomspace(head, head * ratio, count)


def adaptive_loadings(preliminary_coef, exponent, cap=1e8, zero_tol=1e-8):
    """Penalty loadings |b_j|^(-exponent) from a preliminary slope vector.

    Slopes below ``zero_tol`` in magnitude sit at the cap. Raises when every
    loading is capped (the preliminary carries no ordering information).
    """
    if exponent < 1.0 or not np.isfinite(exponent):
        raise InvalidParameterError(f"exponent must be >= 1, got {exponent!r}")
    if cap <= 0.0:
        raise InvalidParameterError("cap must be positive")
    b = np.abs(np.asarray(preliminary_coef, dtype=float))
    with np.errstate(divide="ignore", over="ignore"):
        load = np.where(b < zero_tol, cap, np.minimum(b ** (-float(exponent)), cap))
    if np.all(load >= cap):
        raise InvalidPreliminaryError("all preliminary slopes are (numerically) zero")
    return load


def _en_fit_rows(X, y, rows, penalty, warm, cd_tol, cd_max_sweeps):
    """Unit-weight EN fit on a row subset; falls back to the last iterate on a sweep cap."""
    Xs, ys = X[rows], y[rows]
    try:
        mu, beta = solve_weighted_en(
            Xs, ys, np.ones(rows.size), penalty, warm_start=warm,
            tol=cd_tol, max_sweeps=cd_max_sweeps,
        )
    except ConvergenceError as err:
        mu, beta = err.last
    if not (np.isfinite(mu) and np.all(np.isfinite(beta))):
        return None
    return float(mu), beta


def _sensitivity_components(Xs, ys, mu, beta, penalty, n_components):
    """Principal components of the leave-one-out sensitivity of a regularized fit.

    The fit is linearized at its active set (the L1 part frozen at the fitted
    sign pattern, leaving the ridge-part smoother), giving hat matrix
    H = D (D'D + m*lam*(1-alpha)*diag(0, load_A))^-1 D' with D = [1, X_A].
    Column i of the sensitivity matrix is H[:, i] * e_i / (1 - h_ii); the
    returned scores are its leading left singular vectors scaled by their
    singular values, computed through a thin QR of D so the cost stays
    O(m * a^2). Returns None when nothing is active and the residuals vanish.
    """
    m = Xs.shape[0]
    e = ys - mu - Xs @ beta
    active = np.flatnonzero(beta) if penalty.alpha > 0.0 else np.arange(Xs.shape[1])
    D = np.column_stack([np.ones(m), Xs[:, active]])
    a1 = D.shape[1]
    load = penalty.loadings_for(Xs.shape[1])
    ridge = np.zeros(a1)
    ridge[1:] = m * penalty.lam * (1.0 - penalty.alpha) * load[active]
    G = D.T @ D + np.diag(ridge)
    G[np.diag_indices_from(G)] += 1e-12 * max(1.0, np.trace(G) / a1)
    try:
        B = linalg.solve(G, D.T, assume_a="pos")
    except linalg.LinAlgError:
        return None
    h = np.einsum("ik,ki->i", D, B)
    f = e / np.maximum(1.0 - h, 1e-8)
    Q, R = np.linalg.qr(D)
    small = R @ (B * f)
    U, sv, _ = np.linalg.svd(small, full_matrices=False)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1e-300))) if sv.size else 0
    q = min(n_components, rank)
    if q == 0:
        return None
    return Q @ (U[:, :q] * sv[:q])


def en_py_initial_estimates(X, y, penalty, bdp=0.25, n_components=None,
                            quantiles=(0.90, 0.95), rounds=2,
                            cd_tol=1e-8, cd_max_sweeps=10_000):
    """Candidate starting points from leave-one-out sensitivity analysis.

    Fits the penalized problem with unit weights, flags observations extreme
    in the principal components of the fit's LOO sensitivity matrix (one
    deletion set per component x quantile threshold), refits each retained
    subset, and repeats the procedure once more seeded from the candidate with
    the best S-objective on the full data. Returns the full-data fit plus the
    final round's subset fits as (mu, beta) pairs; at most
    1 + n_components * len(quantiles) entries.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if n < 5:
        raise InvalidDataError("need at least 5 observations for initial estimates")
    if n_components is None:
        n_components = min(p, 10)
    full = _en_fit_rows(X, y, np.arange(n), penalty, None, cd_tol, cd_max_sweeps)
    if full is None:
        raise InvalidDataError("full-data elastic net fit failed")
    candidates = [full]
    cur_rows = np.arange(n)
    cur_fit = full
    final_round = []
    for _ in range(max(1, int(rounds))):
        scores = _sensitivity_components(
            X[cur_rows], y[cur_rows], cur_fit[0], cur_fit[1], penalty, n_components
        )
        if scores is None:
            break
        seen = set()
        round_sets = []
        for k in range(scores.shape[1]):
            comp = np.abs(scores[:, k])
            for quant in quantiles:
                thr = np.quantile(comp, quant)
                rows = cur_rows[comp <= thr]
                if rows.size < 3:
                    continue
                key = rows.tobytes()
                if key not in seen:
                    seen.add(key)
                    round_sets.append(rows)
        round_fits = []
        for rows in round_sets:
            fit = _en_fit_rows(X, y, rows, penalty, cur_fit, cd_tol, cd_max_sweeps)
            if fit is not None:
                round_fits.append((rows, fit))
        if not round_fits:
            break
        final_round = [fit for _, fit in round_fits]
        # seed the next round from the best candidate on the full data
        pool = [(np.arange(n), full)] + round_fits
        objs = [s_objective(X, y, mu, beta, penalty, bdp) for _, (mu, beta) in pool]
        best = int(np.argmin(objs))
        cur_rows, cur_fit = pool[best]
    return candidates + final_round


def _dedup_exact(starts):
    seen = set()
    out = []
    for mu, beta in starts:
        key = (np.float64(mu).tobytes(), np.asarray(beta, dtype=float).tobytes())
        if key not in seen:
            seen.add(key)
            out.append((mu, beta))
    return out


def s_enet_path(X, y, alpha, cfg, loadings=None, bdp=0.25):
    """Fit the penalized S-estimator along a decreasing penalty grid.

    Returns one FitResult per grid value (None marks a failed level). See the
    module docstring for the start-pooling / explore / keep-best strategy.
    """
    X, y = _check_xy(X, y)
    if not (0.0 <= alpha <= 1.0):
        raise InvalidParameterError(f"alpha must lie in [0, 1], got {alpha!r}")
    if not (0.0 < bdp < 1.0):
        raise InvalidParameterError(f"bdp must lie in (0, 1), got {bdp!r}")
    n, p = X.shape
    load = np.ones(p) if loadings is None else np.asarray(loadings, dtype=float)
    if load.shape[0] != p or np.any(load <= 0.0) or not np.all(np.isfinite(load)):
        raise InvalidParameterError("loadings must be positive, finite, length p")
    lams = cfg.lambdas
    XT = np.ascontiguousarray(X.T)

    mu0, _ = intercept_only_fit(y, bdp)
    pooled = [(mu0, np.zeros(p))]
    for idx in range(0, lams.size, cfg.initial_stride):
        pen = Penalty(float(lams[idx]), alpha, load)
        try:
            pooled.extend(
                en_py_initial_estimates(
                    X, y, pen, bdp=bdp,
                    cd_tol=cfg.cd_tol, cd_max_sweeps=cfg.cd_max_sweeps,
                )
            )
        except (InvalidDataError, ExactFitError):
            continue
    pooled = _dedup_exact(pooled)

    results = []
    carried = []
    for lam in lams:
        try:
            results.append(
                _fit_one_level(XT, y, float(lam), alpha, load, bdp, cfg, pooled, carried)
            )
            carried = results[-1][1]
            results[-1] = results[-1][0]
        except FloatingPointError:  # pragma: no cover - defensive
            results.append(None)
    return results


def _fit_one_level(XT, y, lam, alpha, load, bdp, cfg, pooled, carried):
    """Explore all starts at one penalty level, fully iterate the best few."""
    p = XT.shape[0]
    starts = _dedup_exact(pooled + carried)
    k = len(starts)
    mus = np.array([s[0] for s in starts], dtype=float)
    betas = np.ascontiguousarray(np.vstack([s[1] for s in starts]))
    objs = np.empty(k)
    scales = np.empty(k)
    steps = np.empty(k, dtype=np.int64)
    status = np.empty(k, dtype=np.int64)
    kernels.mm_batch(
        XT, y, lam, alpha, load, bdp, mus, betas,
        int(cfg.explore_iterations), cfg.mm_tol, cfg.cd_tol, int(cfg.cd_max_sweeps),
        cfg.scale_rtol, int(cfg.scale_max_iter), objs, scales, steps, status,
    )
    # rank: non-degenerate first, then objective, then insertion index
    degenerate = status == kernels.MM_DEGENERATE
    sort_obj = np.where(np.isnan(objs), np.inf, objs)
    order = np.lexsort((np.arange(k), sort_obj, degenerate.astype(np.int64)))
    kept = []
    for idx in order:
        if not np.isfinite(sort_obj[idx]):
            continue
        dup = False
        for jdx in kept:
            close_obj = abs(objs[idx] - objs[jdx]) <= 1e-9 * max(1.0, abs(objs[jdx]))
            if close_obj and np.max(np.abs(betas[idx] - betas[jdx])) <= 1e-7:
                dup = True
                break
        if not dup:
            kept.append(int(idx))
        if len(kept) >= cfg.keep_best:
            break
    if not kept:
        return None, []

    trace = np.empty(cfg.mm_max_iter + 1)
    finals = []
    for idx in kept:
        mu_f, s_f, obj_f, it_f, st_f = kernels.mm_fit(
            XT, y, lam, alpha, load, bdp, mus[idx], betas[idx],
            int(cfg.mm_max_iter), cfg.mm_tol, cfg.cd_tol, int(cfg.cd_max_sweeps),
            cfg.scale_rtol, int(cfg.scale_max_iter), trace,
        )
        finals.append(
            FitResult(
                intercept=float(mu_f), coef=betas[idx].copy(), scale=float(s_f),
                objective=float(obj_f), iterations=int(steps[idx] + it_f),
                converged=st_f != kernels.MM_MAX_ITER,
                degenerate=st_f == kernels.MM_DEGENERATE, lam=lam,
            )
        )
    pick = np.lexsort(
        (
            np.arange(len(finals)),
            [f.objective for f in finals],
            [f.degenerate for f in finals],
        )
    )[0]
    carried_next = [(f.intercept, f.coef) for f in finals]
    return finals[int(pick)], carried_next


def fit_at(X, y, alpha, lam, loadings=None, bdp=0.25, **path_kwargs):
    """Single-penalty fit: the full start-pooling strategy on a one-point grid."""
    cfg = PathConfig(lambdas=np.array([float(lam)]), **path_kwargs)
    return s_enet_path(X, y, alpha, cfg, loadings=loadings, bdp=bdp)[0]


def breakdown_probe(X, y, m, magnitude, estimator, seed=0):
    """Refit after replacing m rows with coherent adversarial values.

    The replaced rows get every predictor set to +-magnitude and a response of
    opposite sign, a worst-case joint leverage/response pattern. Returns
    (fit_clean, fit_contaminated) from ``estimator(X, y)``.
    """
    X, y = _check_xy(X, y)
    n = y.shape[0]
    if not (0 <= m < n):
        raise InvalidParameterError(f"m must lie in [0, n), got {m!r}")
    rng = np.random.default_rng(seed)
    rows = rng.choice(n, size=m, replace=False)
    Xc = X.copy()
    yc = y.copy()
    for k, i in enumerate(rows):
        sign = 1.0 if k % 2 == 0 else -1.0
        Xc[i, :] = magnitude * sign
        yc[i] = -magnitude * sign
    return estimator(X, y), estimator(Xc, yc)
