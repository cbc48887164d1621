"""Compare the jit-compiled kernels against the pure-numpy fallback.

Runs itself twice as a subprocess, once per backend (the backend is frozen
at import time, so each measurement needs a fresh interpreter), and prints a
side-by-side table of median wall times.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--quick]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _problem(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta0 = np.zeros(p)
    beta0[: max(1, p // 4)] = rng.normal(0, 2, max(1, p // 4))
    y = X @ beta0 + rng.standard_normal(n)
    y[: n // 20] += 30.0  # a few gross outliers keep the weights non-trivial
    return np.ascontiguousarray(X.T), y


def _bench(fn, repeats):
    fn()  # warm path, allocations, caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_worker(repeats, quick):
    from robustenet import kernels

    kernels.warmup()
    scale = 0.25 if quick else 1.0
    out = {"backend": kernels.BACKEND}

    r = np.random.default_rng(1).standard_normal(int(200_000 * scale))
    out["m_scale_200k"] = _bench(lambda: kernels.m_scale(r, 0.25, 1e-9, 200), repeats)

    w = np.empty(r.size)
    out["loss_weights_200k"] = _bench(lambda: kernels.loss_weights(r, 1.0, w), repeats)

    n, p = int(2000 * scale), 50
    XT, y = _problem(n, p, 2)
    wts = np.full(n, 0.5)
    load = np.ones(p)

    def cd():
        beta = np.zeros(p)
        kernels.cd_solve(XT, y, wts, 0.05, 0.75, load, 0.0, beta, 1e-8, 10_000)

    out[f"cd_solve_{n}x{p}"] = _bench(cd, repeats)

    trace = np.empty(501)

    def mm():
        kernels.mm_fit(XT, y, 0.05, 0.75, load, 0.25, float(np.median(y)), np.zeros(p),
                       500, 1e-6, 1e-8, 10_000, 1e-9, 200, trace)

    out[f"mm_fit_{n}x{p}"] = _bench(mm, repeats)

    k = int(64 * scale) or 8
    rng = np.random.default_rng(3)
    mus0 = np.median(y) + rng.standard_normal(k)
    betas0 = rng.standard_normal((k, p))
    objs = np.empty(k)
    scales = np.empty(k)
    steps = np.empty(k, dtype=np.int64)
    status = np.empty(k, dtype=np.int64)

    def batch():
        mus = mus0.copy()
        betas = np.ascontiguousarray(betas0.copy())
        kernels.mm_batch(XT, y, 0.05, 0.75, load, 0.25, mus, betas,
                         100, 1e-5, 1e-7, 5_000, 1e-9, 200, objs, scales, steps, status)

    out[f"mm_batch_{k}starts"] = _bench(batch, max(1, repeats // 2))

    from robustenet.sestimator import PathConfig, default_lambda_grid, s_enet_path, s_lambda_max

    Xp = np.ascontiguousarray(XT.T)[: int(400 * scale) or 100]
    yp = y[: Xp.shape[0]]
    lams = default_lambda_grid(s_lambda_max(Xp, yp, 0.75, None, 0.25), 10, 1e-2)

    def path():
        s_enet_path(Xp, yp, 0.75, PathConfig(lambdas=lams, explore_iterations=3,
                                             keep_best=4, initial_stride=5), bdp=0.25)

    out[f"path_{Xp.shape[0]}x{p}_10lams"] = _bench(path, max(1, repeats // 2))

    print(json.dumps(out))
    return 0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        return run_worker(args.repeats, args.quick)

    results = {}
    for label, disable in (("numba", "0"), ("numpy", "1")):
        env = {**os.environ, "ROBUSTENET_DISABLE_NUMBA": disable}
        cmd = [sys.executable, __file__, "--worker", "--repeats", str(args.repeats)]
        if args.quick:
            cmd.append("--quick")
        proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        if payload.pop("backend") != label:
            print(f"warning: requested {label} backend unavailable, results reflect the fallback",
                  file=sys.stderr)
        results[label] = payload

    names = list(results["numba"])
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name in names:
        a, b = results["numba"][name], results["numpy"][name]
        print(f"{name:<{width}}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  {b / a:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
