"""Backend selection for the numerical kernels.

The numba backend is the default. Set ``ROBUSTENET_DISABLE_NUMBA=1`` (or any
of 1/true/yes) before import to force the pure-numpy fallback; the fallback
is also used automatically when numba cannot be imported. ``BACKEND`` names
the active implementation so callers and benchmarks can report it.
"""

import os

_flag = os.environ.get("ROBUSTENET_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in {"1", "true", "yes", "on"}

if not _disabled:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised only on numba-less installs
        from . import _kernels_numpy as _impl

        BACKEND = "numpy"
else:
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"

MM_CONVERGED = _impl.MM_CONVERGED
MM_MAX_ITER = _impl.MM_MAX_ITER
MM_DEGENERATE = _impl.MM_DEGENERATE

mean_rho = _impl.mean_rho
m_scale = _impl.m_scale
loss_weights = _impl.loss_weights
penalty_value = _impl.penalty_value
cd_solve = _impl.cd_solve
mm_fit = _impl.mm_fit
mm_batch = _impl.mm_batch


def set_threads(n):
    """Cap the worker-thread count of the batched kernels (no-op on numpy)."""
    if BACKEND == "numba":
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def warmup():
    """Trigger (cached) compilation of every kernel on tiny inputs."""
    import numpy as np

    r = np.array([0.3, -1.2, 0.7, 2.5])
    XT = np.array([[1.0, -0.5, 0.25, 2.0], [0.0, 1.0, -1.0, 0.5]])
    y = np.array([0.1, 1.0, -0.4, 1.5])
    load = np.ones(2)
    w = np.empty(4)
    mean_rho(r, 1.0)
    m_scale(r, 0.25, 1e-8, 200)
    loss_weights(r, 1.0, w)
    penalty_value(np.array([0.5, -0.2]), 0.1, 0.75, load)
    beta = np.zeros(2)
    cd_solve(XT, y, np.full(4, 0.25), 0.05, 0.75, load, 0.0, beta, 1e-8, 100)
    trace = np.empty(6)
    mm_fit(XT, y, 0.05, 0.75, load, 0.25, 0.0, np.zeros(2), 5, 1e-6, 1e-8, 100, 1e-8, 200, trace)
    mus = np.zeros(2)
    betas = np.zeros((2, 2))
    objs = np.empty(2)
    scales = np.empty(2)
    steps = np.empty(2, dtype=np.int64)
    status = np.empty(2, dtype=np.int64)
    mm_batch(
        XT, y, 0.05, 0.75, load, 0.25, mus, betas, 3, 1e-6, 1e-8, 100, 1e-8, 200,
        objs, scales, steps, status,
    )
