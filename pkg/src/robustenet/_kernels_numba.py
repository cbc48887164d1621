"""Numba implementations of the hot numerical kernels.

Everything here works on the cutoff-1 bisquare family and C-contiguous
float64 arrays. ``XT`` is the (p, n) transposed design so coordinate scans
run over contiguous memory. The batched M-M driver parallelizes over
candidate starts only; each candidate's arithmetic is sequential, so results
do not depend on the number of threads.
"""

import numpy as np
from numba import njit, prange

# status codes shared with the numpy backend
MM_CONVERGED = 0
MM_MAX_ITER = 1
MM_DEGENERATE = 2


@njit(cache=True)
def mean_rho(r, s):
    """Average bisquare loss of r/s at cutoff 1."""
    n = r.shape[0]
    acc = 0.0
    for i in range(n):
        t = r[i] / s
        u2 = t * t
        if u2 >= 1.0:
            acc += 1.0
        else:
            w = 1.0 - u2
            acc += 1.0 - w * w * w
    return acc / n


@njit(cache=True)
def m_scale(r, bdp, rel_tol, max_iter):
    """M-scale of a residual vector: solve mean_rho(r, s) = bdp for s.

    Returns 0 when so many residuals are exactly zero that the implicit
    equation has no positive solution. Bracketed bisection with a
    multiplicative fixed-point accelerator; the bracket never escapes
    [smallest nonzero |r|, expanded max |r|].
    """
    n = r.shape[0]
    if n == 0:
        return 0.0
    nz = 0
    rmax = 0.0
    rmin_pos = np.inf
    for i in range(n):
        a = abs(r[i])
        if a > 0.0:
            nz += 1
            if a < rmin_pos:
                rmin_pos = a
            if a > rmax:
                rmax = a
    if nz <= n * bdp * (1.0 + 1e-12):
        return 0.0

    lo = rmin_pos
    hi = rmax
    f_hi = mean_rho(r, hi)
    it = 0
    while f_hi > bdp and it < 64:
        lo = hi
        hi *= 2.0
        f_hi = mean_rho(r, hi)
        it += 1

    s = np.sqrt(lo * hi)
    for _ in range(max_iter):
        f = mean_rho(r, s)
        if f > bdp:
            lo = s
        else:
            hi = s
        if hi - lo <= rel_tol * s:
            break
        s_fp = s * np.sqrt(f / bdp)
        if s_fp <= lo or s_fp >= hi:
            s_fp = 0.5 * (lo + hi)
        s = s_fp
    return 0.5 * (lo + hi)


@njit(cache=True)
def loss_weights(r, scale, out):
    """Descent weights psi(t)/t at t = r/scale (6 at t=0, 0 beyond the cutoff)."""
    n = r.shape[0]
    total = 0.0
    for i in range(n):
        t = r[i] / scale
        u2 = t * t
        if u2 >= 1.0:
            out[i] = 0.0
        else:
            w = 1.0 - u2
            out[i] = 6.0 * w * w
            total += out[i]
    return total


@njit(cache=True)
def penalty_value(beta, lam, alpha, load):
    """Elastic-net penalty with per-coefficient loadings."""
    p = beta.shape[0]
    acc = 0.0
    for j in range(p):
        b = beta[j]
        acc += load[j] * (0.5 * (1.0 - alpha) * b * b + alpha * abs(b))
    return lam * acc


@njit(cache=True)
def _cd_sweep(XT, v, r, col_sq, l1, l2, load, beta, active_only):
    """One coordinate-descent pass over the slopes; returns (max change, activations)."""
    p, n = XT.shape
    max_change = 0.0
    activated = 0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        xr = 0.0
        for i in range(n):
            xr += v[i] * XT[j, i] * r[i]
        z = xr + col_sq[j] * bj
        thr = l1 * load[j]
        az = abs(z) - thr
        if az <= 0.0:
            bnew = 0.0
        else:
            denom = col_sq[j] + l2 * load[j]
            if denom <= 0.0:
                bnew = 0.0
            else:
                bnew = az / denom
                if z < 0.0:
                    bnew = -bnew
        if bnew != bj:
            d = bnew - bj
            for i in range(n):
                r[i] -= d * XT[j, i]
            beta[j] = bnew
            if bj == 0.0:
                activated += 1
            change = abs(d) / (1.0 + abs(bnew))
            if change > max_change:
                max_change = change
    return max_change, activated


@njit(cache=True)
def cd_solve(XT, y, v, lam, alpha, load, mu, beta, tol, max_sweeps):
    """Cyclic coordinate descent for the weight-normalized elastic net.

    Minimizes 0.5 * sum_i v_i (y_i - mu - x_i'beta)^2 + penalty(beta) with
    sum(v) = 1. ``beta`` is updated in place. Active-set cycling: converge on
    the nonzero coordinates, then one full pass; finish when a full pass
    neither activates a coordinate nor moves anything beyond tolerance.

    Returns (mu, sweeps, converged).
    """
    p, n = XT.shape
    r = np.empty(n)
    for i in range(n):
        r[i] = y[i] - mu
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                r[i] -= bj * XT[j, i]
    col_sq = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += v[i] * XT[j, i] * XT[j, i]
        col_sq[j] = acc
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        # settle the current active set
        while sweeps < max_sweeps:
            dmu = 0.0
            for i in range(n):
                dmu += v[i] * r[i]
            mu += dmu
            for i in range(n):
                r[i] -= dmu
            max_change, _ = _cd_sweep(XT, v, r, col_sq, l1, l2, load, beta, True)
            mu_change = abs(dmu) / (1.0 + abs(mu))
            if mu_change > max_change:
                max_change = mu_change
            sweeps += 1
            if max_change < tol:
                break
        if sweeps >= max_sweeps:
            break
        # one full pass to admit new coordinates
        dmu = 0.0
        for i in range(n):
            dmu += v[i] * r[i]
        mu += dmu
        for i in range(n):
            r[i] -= dmu
        max_change, activated = _cd_sweep(XT, v, r, col_sq, l1, l2, load, beta, False)
        mu_change = abs(dmu) / (1.0 + abs(mu))
        if mu_change > max_change:
            max_change = mu_change
        sweeps += 1
        if max_change < tol and activated == 0:
            converged = True
            break
    return mu, sweeps, converged


@njit(cache=True)
def mm_fit(
    XT,
    y,
    lam,
    alpha,
    load,
    bdp,
    mu,
    beta,
    max_steps,
    mm_tol,
    cd_tol,
    cd_max_sweeps,
    scale_rtol,
    scale_max_iter,
    trace,
):
    """Iteratively reweighted descent on the penalized S-objective.

    Each step reweights by the bounded-loss derivative at the current scale,
    solves the weighted elastic net (penalty rescaled by sum(w_i z_i^2)/(2
    sum(w)) so the step minimizes the tangent majorizer of the squared
    M-scale), then recomputes the exact M-scale. A step that would raise the
    exact objective is rejected and the iteration stops, so the objective
    sequence written to ``trace`` is non-increasing. ``beta`` and the returned
    ``mu`` carry the final iterate.

    Returns (mu, scale, objective, steps, status).
    """
    p, n = XT.shape
    r = np.empty(n)
    for i in range(n):
        r[i] = y[i] - mu
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                r[i] -= bj * XT[j, i]
    s = m_scale(r, bdp, scale_rtol, scale_max_iter)
    pen = penalty_value(beta, lam, alpha, load)
    if s == 0.0:
        obj = pen
        trace[0] = obj
        return mu, s, obj, 0, MM_DEGENERATE
    obj = s * s + pen
    trace[0] = obj

    w = np.empty(n)
    beta_try = np.empty(p)
    status = MM_MAX_ITER
    steps = 0
    for it in range(max_steps):
        sw = loss_weights(r, s, w)
        if sw <= 0.0:
            status = MM_CONVERGED
            break
        phisum = 0.0
        for i in range(n):
            zi = r[i] / s
            phisum += w[i] * zi * zi
        if phisum <= 0.0:
            status = MM_CONVERGED
            break
        v = w / sw
        lam_eff = lam * 0.5 * phisum / sw
        for j in range(p):
            beta_try[j] = beta[j]
        mu_try, _, _ = cd_solve(XT, y, v, lam_eff, alpha, load, mu, beta_try, cd_tol, cd_max_sweeps)
        for i in range(n):
            r[i] = y[i] - mu_try
        for j in range(p):
            bj = beta_try[j]
            if bj != 0.0:
                for i in range(n):
                    r[i] -= bj * XT[j, i]
        s_new = m_scale(r, bdp, scale_rtol, scale_max_iter)
        pen_new = penalty_value(beta_try, lam, alpha, load)
        if s_new == 0.0:
            mu = mu_try
            for j in range(p):
                beta[j] = beta_try[j]
            s = s_new
            obj = pen_new
            steps = it + 1
            trace[steps] = obj
            status = MM_DEGENERATE
            break
        obj_new = s_new * s_new + pen_new
        if obj_new > obj + 1e-15 * (1.0 + abs(obj)):
            # majorizer step would overshoot; keep the previous iterate
            status = MM_CONVERGED
            break
        mu = mu_try
        for j in range(p):
            beta[j] = beta_try[j]
        rel_drop = (obj - obj_new) / max(abs(obj), 1e-300)
        obj = obj_new
        s = s_new
        steps = it + 1
        trace[steps] = obj
        if rel_drop < mm_tol:
            status = MM_CONVERGED
            break
    return mu, s, obj, steps, status


@njit(cache=True, parallel=True)
def mm_batch(
    XT,
    y,
    lam,
    alpha,
    load,
    bdp,
    mus,
    betas,
    max_steps,
    mm_tol,
    cd_tol,
    cd_max_sweeps,
    scale_rtol,
    scale_max_iter,
    objs,
    scales,
    steps,
    status,
):
    """Run :func:`mm_fit` over a batch of candidate starts (rows of ``betas``).

    Candidates are independent: the loop parallelizes over them without any
    cross-candidate reduction, so the outcome is identical for any thread
    count. All per-candidate outputs are written in place.
    """
    k = betas.shape[0]
    for c in prange(k):
        trace = np.empty(max_steps + 1)
        mu_c, s_c, obj_c, it_c, st_c = mm_fit(
            XT,
            y,
            lam,
            alpha,
            load,
            bdp,
            mus[c],
            betas[c],
            max_steps,
            mm_tol,
            cd_tol,
            cd_max_sweeps,
            scale_rtol,
            scale_max_iter,
            trace,
        )
        mus[c] = mu_c
        objs[c] = obj_c
        scales[c] = s_c
        steps[c] = it_c
        status[c] = st_c
