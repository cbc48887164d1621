"""Tukey bisquare loss family.

The bounded loss rho and its derivatives drive every robust component in the
package: the M-scale of residuals, the descent weights of the iteratively
reweighted solver, and the location estimator used for standardization. The
cutoff is a pure scale-family parameter (rho(t, c) = rho(t/c, 1)), so the
internal solvers fix cutoff 1 and rescale afterwards; the cutoff that makes
the companion M-scale consistent for the standard deviation under Gaussian
data is available from :func:`consistency_cutoff`.
"""

from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import InvalidParameterError

__all__ = [
    "rho",
    "psi",
    "psi_prime",
    "varphi",
    "consistency_cutoff",
]


def _check_cutoff(cutoff):
    if not np.isfinite(cutoff) or cutoff <= 0.0:
        raise InvalidParameterError(f"cutoff must be a positive finite number, got {cutoff!r}")


def rho(t, cutoff=1.0):
    """Bisquare loss, rising from 0 at t=0 to 1 for |t| >= cutoff.

    Parameters
    ----------
    t : array_like
        Evaluation points.
    cutoff : float
        Positive scale of the family.

    Returns
    -------
    ndarray or float
        1 - (1 - (t/cutoff)^2)^3 inside the cutoff, 1 outside.
    """
    _check_cutoff(cutoff)
    t = np.asarray(t, dtype=float)
    u2 = np.minimum((t / cutoff) ** 2, 1.0)
    out = 1.0 - (1.0 - u2) ** 3
    return out if out.ndim else float(out)


def psi(t, cutoff=1.0):
    """First derivative of :func:`rho` (zero outside the cutoff)."""
    _check_cutoff(cutoff)
    t = np.asarray(t, dtype=float)
    u = t / cutoff
    inside = np.abs(u) <= 1.0
    core = 6.0 * t / cutoff**2 * (1.0 - u**2) ** 2
    out = np.where(inside, core, 0.0)
    return out if out.ndim else float(out)


def psi_prime(t, cutoff=1.0):
    """Second derivative of :func:`rho`; psi_prime(0) = 6/cutoff^2."""
    _check_cutoff(cutoff)
    t = np.asarray(t, dtype=float)
    u2 = (t / cutoff) ** 2
    inside = u2 <= 1.0
    core = 6.0 / cutoff**2 * (1.0 - u2) * (1.0 - 5.0 * u2)
    out = np.where(inside, core, 0.0)
    return out if out.ndim else float(out)


def varphi(t, cutoff=1.0):
    """t * psi(t): even, nonnegative, unimodal on t >= 0 with mode cutoff/sqrt(3)."""
    t = np.asarray(t, dtype=float)
    out = t * psi(t, cutoff)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def consistency_cutoff(bdp):
    """Cutoff c making the M-scale with target `bdp` Fisher-consistent for Gaussian sd.

    Solves E[rho(Z/c)] = bdp for Z standard Normal via adaptive quadrature and
    bracketed root finding (relative tolerance 1e-8). Results are cached per
    target. Larger targets need smaller cutoffs, e.g. c(0.5) ~ 1.5476.
    """
    if not (0.0 < bdp < 1.0):
        raise InvalidParameterError(f"bdp must lie in (0, 1), got {bdp!r}")

    def expected_rho(c):
        val, _ = integrate.quad(
            lambda z: rho(z, c) * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi),
            -np.inf,
            np.inf,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        return val - bdp

    # E[rho(Z/c)] decreases from 1 (c -> 0) to 0 (c -> inf); bracket and bisect.
    lo, hi = 1e-3, 10.0
    while expected_rho(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover - unreachable for bdp in (0,1)
            raise InvalidParameterError(f"no cutoff bracket found for bdp={bdp}")
    root = optimize.brentq(expected_rho, lo, hi, rtol=1e-10, xtol=1e-12)
    return float(root)
