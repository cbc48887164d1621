"""Pure-numpy fallback for the hot kernels.

Mirrors the numba backend's API and algorithms exactly; coordinate updates
loop in Python with vectorized inner products. Correct on any install, slower
on large problems. Selected via the ``ROBUSTENET_DISABLE_NUMBA`` env flag or
when numba is unavailable.
"""

import numpy as np

MM_CONVERGED = 0
MM_MAX_ITER = 1
MM_DEGENERATE = 2


def mean_rho(r, s):
    u2 = np.minimum((r / s) ** 2, 1.0)
    return float(np.mean(1.0 - (1.0 - u2) ** 3))


def m_scale(r, bdp, rel_tol, max_iter):
    n = r.shape[0]
    if n == 0:
        return 0.0
    a = np.abs(r)
    nz_mask = a > 0.0
    nz = int(np.count_nonzero(nz_mask))
    if nz <= n * bdp * (1.0 + 1e-12):
        return 0.0
    lo = float(a[nz_mask].min())
    hi = float(a.max())
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


def loss_weights(r, scale, out):
    t2 = (r / scale) ** 2
    np.multiply(6.0, np.maximum(1.0 - t2, 0.0) ** 2, out=out)
    return float(out.sum())


def penalty_value(beta, lam, alpha, load):
    return float(
        lam * np.sum(load * (0.5 * (1.0 - alpha) * beta**2 + alpha * np.abs(beta)))
    )


def _cd_sweep(XT, vxt, r, col_sq, l1, l2, load, beta, active_only):
    p = XT.shape[0]
    max_change = 0.0
    activated = 0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        z = float(vxt[j] @ r) + col_sq[j] * bj
        az = abs(z) - l1 * load[j]
        if az <= 0.0:
            bnew = 0.0
        else:
            denom = col_sq[j] + l2 * load[j]
            bnew = 0.0 if denom <= 0.0 else np.sign(z) * az / denom
        if bnew != bj:
            r -= (bnew - bj) * XT[j]
            beta[j] = bnew
            if bj == 0.0:
                activated += 1
            max_change = max(max_change, abs(bnew - bj) / (1.0 + abs(bnew)))
    return max_change, activated


def cd_solve(XT, y, v, lam, alpha, load, mu, beta, tol, max_sweeps):
    r = y - mu - beta @ XT
    vxt = XT * v  # (p, n), weighted rows
    col_sq = np.einsum("ji,ji->j", vxt, XT)
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    def _intercept_step():
        nonlocal mu, r
        dmu = float(v @ r)
        mu += dmu
        r -= dmu
        return abs(dmu) / (1.0 + abs(mu))

    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        while sweeps < max_sweeps:
            mu_change = _intercept_step()
            max_change, _ = _cd_sweep(XT, vxt, r, col_sq, l1, l2, load, beta, True)
            sweeps += 1
            if max(max_change, mu_change) < tol:
                break
        if sweeps >= max_sweeps:
            break
        mu_change = _intercept_step()
        max_change, activated = _cd_sweep(XT, vxt, r, col_sq, l1, l2, load, beta, False)
        sweeps += 1
        if max(max_change, mu_change) < tol and activated == 0:
            converged = True
            break
    return mu, sweeps, converged


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
    n = XT.shape[1]
    r = y - mu - beta @ XT
    s = m_scale(r, bdp, scale_rtol, scale_max_iter)
    pen = penalty_value(beta, lam, alpha, load)
    if s == 0.0:
        trace[0] = pen
        return mu, s, pen, 0, MM_DEGENERATE
    obj = s * s + pen
    trace[0] = obj

    w = np.empty(n)
    status = MM_MAX_ITER
    steps = 0
    for it in range(max_steps):
        sw = loss_weights(r, s, w)
        if sw <= 0.0:
            status = MM_CONVERGED
            break
        # tangent majorizer of the squared M-scale: scale^2 <= sum(w r^2)/phisum
        # with phisum = sum(w_i z_i^2); matching penalty rescale keeps each
        # weighted solve a true descent step on the composite objective
        phisum = float(w @ (r / s) ** 2)
        if phisum <= 0.0:
            status = MM_CONVERGED
            break
        v = w / sw
        lam_eff = lam * 0.5 * phisum / sw
        beta_try = beta.copy()
        mu_try, _, _ = cd_solve(XT, y, v, lam_eff, alpha, load, mu, beta_try, cd_tol, cd_max_sweeps)
        r = y - mu_try - beta_try @ XT
        s_new = m_scale(r, bdp, scale_rtol, scale_max_iter)
        pen_new = penalty_value(beta_try, lam, alpha, load)
        if s_new == 0.0:
            mu = mu_try
            beta[:] = beta_try
            s = s_new
            obj = pen_new
            steps = it + 1
            trace[steps] = obj
            status = MM_DEGENERATE
            break
        obj_new = s_new * s_new + pen_new
        if obj_new > obj + 1e-15 * (1.0 + abs(obj)):
            status = MM_CONVERGED
            break
        mu = mu_try
        beta[:] = beta_try
        rel_drop = (obj - obj_new) / max(abs(obj), 1e-300)
        obj = obj_new
        s = s_new
        steps = it + 1
        trace[steps] = obj
        if rel_drop < mm_tol:
            status = MM_CONVERGED
            break
    return mu, s, obj, steps, status


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
    k = betas.shape[0]
    trace = np.empty(max_steps + 1)
    for c in range(k):
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
