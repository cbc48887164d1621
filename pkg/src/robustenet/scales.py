"""Robust scale and location estimators.

All medians in this package use the lower-median convention (the ceil(n/2)-th
order statistic), which keeps every estimator deterministic and exactly
reproducible across platforms.
"""

import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidDataError, InvalidParameterError

__all__ = ["lower_median", "m_scale", "tau_scale", "m_location"]


def _as_vector(values, name, allow_inf=False):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidDataError(f"{name} must be nonempty")
    if allow_inf:
        if np.isnan(arr).any():
            raise InvalidDataError(f"{name} contains NaN")
    elif not np.all(np.isfinite(arr)):
        raise InvalidDataError(f"{name} contains non-finite values")
    return arr


def lower_median(values):
    """The ceil(n/2)-th order statistic of ``values``."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidDataError("values must be nonempty")
    k = (arr.size + 1) // 2 - 1
    return float(np.partition(arr, k)[k])


def m_scale(residuals, bdp=0.25, cutoff=1.0, rel_tol=1e-8, max_iter=200):
    """M-scale of a residual vector under the bisquare loss.

    Solves mean(rho(r_i / (s * cutoff))) = bdp for s >= 0. Returns 0 exactly
    when at least n*(1-bdp) residuals are zero (the implicit equation then has
    no positive root). Scale equivariant: m_scale(k*r) = |k|*m_scale(r).

    Parameters
    ----------
    residuals : array_like
        Residual vector (finite, nonempty).
    bdp : float
        Breakdown target in (0, 1); also the right-hand side of the implicit
        equation.
    cutoff : float
        Bisquare cutoff. The family is a pure scale family, so the solution
        at cutoff c equals the cutoff-1 solution divided by c.
    """
    if not (0.0 < bdp < 1.0):
        raise InvalidParameterError(f"bdp must lie in (0, 1), got {bdp!r}")
    if cutoff <= 0.0 or not np.isfinite(cutoff):
        raise InvalidParameterError(f"cutoff must be positive, got {cutoff!r}")
    r = _as_vector(residuals, "residuals")
    return float(kernels.m_scale(r, float(bdp), float(rel_tol), int(max_iter))) / cutoff


def tau_scale(errors, cutoff=3.0):
    """Truncated second-moment scale of prediction errors.

    The lower median m of |e_i| sets the truncation unit; the statistic is
    m * sqrt(mean(min(cutoff, |e_i|/m)^2)). Zero when more than half the
    errors vanish; individual errors may be infinite (they saturate at the
    cutoff), which is what bounds the influence of any single error.
    """
    if cutoff <= 0.0 or not np.isfinite(cutoff):
        raise InvalidParameterError(f"cutoff must be positive, got {cutoff!r}")
    e = np.abs(_as_vector(errors, "errors", allow_inf=True))
    med = lower_median(e)
    if med == 0.0:
        return 0.0
    trunc = np.minimum(e / med, cutoff)
    return float(med * np.sqrt(np.mean(trunc**2)))


def m_location(values, cutoff=4.685, rel_tol=1e-8, max_iter=200):
    """Bisquare M-estimate of location with MAD standardization.

    Iteratively reweighted mean with weights (1 - (u/cutoff)^2)^2 on
    u = (x - m) / (1.4826 * MAD); values past the cutoff get weight zero.
    When the MAD vanishes (more than half the values tie), returns the mean
    of the values inside a small band around the median.
    """
    if cutoff <= 0.0 or not np.isfinite(cutoff):
        raise InvalidParameterError(f"cutoff must be positive, got {cutoff!r}")
    x = _as_vector(values, "values")
    med = lower_median(x)
    mad = lower_median(np.abs(x - med)) * 1.4826
    if mad == 0.0:
        band = 1e-8 * max(1.0, abs(med))
        near = np.abs(x - med) <= band
        return float(np.mean(x[near]))
    m = med
    for _ in range(max_iter):
        u = (x - m) / (mad * cutoff)
        w = np.maximum(1.0 - u**2, 0.0) ** 2
        sw = w.sum()
        if sw <= 0.0:  # pragma: no cover - impossible with mad > 0
            return float(m)
        m_new = float(w @ x / sw)
        if abs(m_new - m) <= rel_tol * (mad + abs(m_new)):
            return m_new
        m = m_new
    raise ConvergenceError(f"m_location did not converge in {max_iter} iterations", last=m)


def _column_m_locations(M, cutoff=4.685, rel_tol=1e-8, max_iter=200):
    """Column-wise :func:`m_location` on a matrix, vectorized with per-column freezing."""
    M = np.asarray(M, dtype=float)
    n, p = M.shape
    med = np.sort(M, axis=0)[(n + 1) // 2 - 1]
    mad = np.sort(np.abs(M - med), axis=0)[(n + 1) // 2 - 1] * 1.4826
    out = med.copy()
    zero = mad == 0.0
    for j in np.flatnonzero(zero):
        band = 1e-8 * max(1.0, abs(med[j]))
        near = np.abs(M[:, j] - med[j]) <= band
        out[j] = np.mean(M[near, j])
    active = np.flatnonzero(~zero)
    for _ in range(max_iter):
        if active.size == 0:
            break
        u = (M[:, active] - out[active]) / (mad[active] * cutoff)
        w = np.maximum(1.0 - u**2, 0.0) ** 2
        m_new = np.einsum("ij,ij->j", w, M[:, active]) / w.sum(axis=0)
        done = np.abs(m_new - out[active]) <= rel_tol * (mad[active] + np.abs(m_new))
        out[active] = m_new
        active = active[~done]
    return out


def _column_m_scales(R, bdp, cutoff=1.0, rel_tol=1e-9, max_iter=200):
    """Column-wise :func:`m_scale` via the active kernel."""
    R = np.asarray(R, dtype=float)
    out = np.empty(R.shape[1])
    for j in range(R.shape[1]):
        col = np.ascontiguousarray(R[:, j])
        out[j] = kernels.m_scale(col, float(bdp), float(rel_tol), int(max_iter)) / cutoff
    return out
