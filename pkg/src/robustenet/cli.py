"""Command line surface: fit, path, simulate, evaluate, reproduce.

Heavy modules are imported inside the handlers: the worker-thread count must
land in the environment before the compiled kernels are first imported, so
this module keeps its top-level imports light.

Exit codes: 0 success, 2 invalid configuration, 3 invalid data,
4 estimation failure (non-convergence, exact fit, unusable preliminary).
"""

import argparse
import os
import sys

from .errors import (
    ConvergenceError,
    ExactFitError,
    InvalidDataError,
    InvalidParameterError,
    InvalidPreliminaryError,
)

METHODS = ("adaptive-senet", "senet", "ls-enet")
FIGURES = (
    "good-leverage",
    "scenario1-prediction",
    "scenario1-mcc",
    "scenario2-prediction",
    "scenario2-mcc",
)
REPRODUCE_HEADER = "method,p,nu,contamination,seed,metric,value"

# deterministic offset separating test-set seeds from training seeds
_TEST_SEED_OFFSET = 1_000_003


def _float_list(text):
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    return vals


def _int_list(text):
    vals = [int(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    return vals


def _add_common(sp):
    sp.add_argument("--threads", type=int, default=1, help="worker threads for batched kernels")
    sp.add_argument("--out", required=True, help="output file path")


def _add_cv_flags(sp, reps=10, lambdas=50):
    sp.add_argument("--bdp", type=float, default=0.25, help="breakdown target of the M-scale")
    sp.add_argument("--tau-cutoff", type=float, default=3.0, help="truncation of the CV error scale")
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--reps", type=int, default=reps, help="cross-validation replications")
    sp.add_argument("--alphas", type=_float_list, default=[0.5, 0.75, 1.0])
    sp.add_argument("--exponents", type=_float_list, default=[1.0, 2.0])
    sp.add_argument("--lambdas", type=int, default=lambdas, help="penalty grid size")
    sp.add_argument("--lambda-ratio", type=float, default=1e-3, help="grid tail over head ratio")
    sp.add_argument(
        "--scorer", choices=("tau", "rmse", "mae"), default=None,
        help="CV error measure (default: tau, or mae for ls-enet)",
    )
    sp.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robustenet",
        description="Robust regularized regression with adaptive elastic-net penalties.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="cross-validated fit of a dataset CSV")
    sp.add_argument("--data", required=True, help="dataset CSV (y, x1..xp)")
    sp.add_argument("--method", choices=METHODS, default="adaptive-senet")
    _add_cv_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("path", help="full-data penalty path (no cross-validation)")
    sp.add_argument("--data", required=True)
    sp.add_argument("--alpha", type=float, default=0.75)
    _add_cv_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset with truth sidecar")
    sp.add_argument("--scenario", choices=("one", "alternative", "good-leverage"), default="one")
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--p", type=int, default=32)
    sp.add_argument("--nu", type=float, default=2.0, help="error stability parameter")
    sp.add_argument("--clean", action="store_true", help="disable adversarial contamination")
    sp.add_argument("--leverage", type=float, default=10.0, help="good-leverage multiplier")
    sp.add_argument("--k-lev", type=float, default=None, help="bad-leverage factor override")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--truth", default=None, help="sidecar path (default: OUT.truth.json)")
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("evaluate", help="score a fit report against a truth sidecar")
    sp.add_argument("--report", required=True, help="fit report JSON")
    sp.add_argument("--truth", required=True, help="truth sidecar JSON")
    sp.add_argument("--test-data", default=None, help="held-out dataset CSV for prediction error")
    sp.add_argument("--reference", default=None, help="fit report JSON to compare against")
    sp.add_argument("--tau-cutoff", type=float, default=3.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("reproduce", help="per-seed metric table for one study figure")
    sp.add_argument("--figure", choices=FIGURES, required=True)
    sp.add_argument("--seeds", type=int, default=5, help="number of replication seeds")
    sp.add_argument("--p", type=_int_list, default=None, help="predictor counts (default 32)")
    sp.add_argument("--nu", type=_float_list, default=None, help="error stability values (default 2)")
    sp.add_argument(
        "--contamination", choices=("both", "clean", "contaminated"), default="both"
    )
    sp.add_argument("--methods", default=",".join(METHODS), help="comma-separated method list")
    sp.add_argument("--test-n", type=int, default=1000, help="held-out test sample size")
    sp.add_argument("--leverage", type=float, default=10.0)
    _add_cv_flags(sp, reps=5, lambdas=30)
    _add_common(sp)
    sp.set_defaults(func=cmd_reproduce)

    return parser


def _cv_config(args, method):
    from .cv import CvConfig

    scorer = args.scorer if args.scorer is not None else ("mae" if method == "ls-enet" else "tau")
    return CvConfig(
        bdp=args.bdp,
        tau_cutoff=args.tau_cutoff,
        n_folds=args.folds,
        n_reps=args.reps,
        alphas=tuple(args.alphas),
        exponents=tuple(args.exponents),
        n_lambdas=args.lambdas,
        lambda_ratio=args.lambda_ratio,
        seed=args.seed,
        scorer=scorer,
    )


def _fitter(method):
    from . import cv

    return {
        "adaptive-senet": cv.fit_adaptive_s_enet_cv,
        "senet": cv.fit_s_enet_cv,
        "ls-enet": cv.fit_ls_enet_cv,
    }[method]


def cmd_fit(args):
    from . import dataio, kernels

    kernels.set_threads(args.threads)
    X, y = dataio.read_dataset_csv(args.data)
    fit = _fitter(args.method)(X, y, _cv_config(args, args.method))
    dataio.write_fit_report(args.out, fit)
    print(
        f"{args.method}: alpha={fit.alpha:g} exponent={fit.exponent if fit.exponent is not None else '-'} "
        f"lam={fit.lam:.6g} active={fit.active_set.size} scale={fit.scale:.6g} -> {args.out}"
    )
    return 0


def cmd_path(args):
    from . import cv, dataio, kernels

    kernels.set_threads(args.threads)
    X, y = dataio.read_dataset_csv(args.data)
    lambdas, fits, rec = cv.fit_path(X, y, args.alpha, _cv_config(args, "senet"))
    payload = {
        "format": "robustenet/path",
        "version": dataio._version(),
        "alpha": args.alpha,
        "lambdas": lambdas,
        "fits": [
            None
            if f is None
            else {
                "lam": f.lam,
                "intercept": f.intercept,
                "coef": f.coef,
                "active_set": f.active_set,
                "scale": f.scale,
                "objective": f.objective,
                "iterations": f.iterations,
                "converged": f.converged,
                "degenerate": f.degenerate,
            }
            for f in fits
        ],
        "standardization": {
            "x_center": rec.x_center, "x_scale": rec.x_scale, "y_center": rec.y_center,
        },
        "config": _cv_config(args, "senet"),
    }
    dataio.write_json(args.out, payload)
    done = sum(f is not None for f in fits)
    print(f"path: {done}/{len(fits)} penalty levels fitted -> {args.out}")
    return 0


def cmd_simulate(args):
    from . import dataio, simdata

    n, p = args.n, args.p
    if args.scenario == "good-leverage":
        # fixed 100x32 design; size flags do not apply
        if (args.n, args.p) != (200, 32) and (args.n, args.p) != (100, 32):
            print("note: good-leverage uses a fixed 100x32 design, ignoring --n/--p", file=sys.stderr)
        n, p = 100, 32
    cfg = simdata.ScenarioConfig(
        variant=args.scenario, n=n, p=p, nu=args.nu,
        contaminated=not args.clean, seed=args.seed, leverage=args.leverage,
        k_lev=args.k_lev,
    )
    data = simdata.generate(cfg)
    dataio.write_dataset_csv(args.out, data.X, data.y)
    truth_path = args.truth if args.truth is not None else args.out + ".truth.json"
    dataio.write_truth_json(truth_path, data)
    print(f"simulate: {data.X.shape[0]}x{data.X.shape[1]} -> {args.out} (+ {truth_path})")
    return 0


def _specificity_on(coef, true_coef, subset):
    from . import metrics

    import numpy as np

    idx = np.asarray(subset, dtype=int)
    counts = metrics.confusion_counts(np.asarray(coef)[idx], np.asarray(true_coef)[idx])
    return metrics.sensitivity_specificity(counts)[1]


def cmd_evaluate(args):
    import numpy as np

    from . import dataio, metrics

    report = dataio.read_json(args.report)
    truth = dataio.read_json(args.truth)
    coef = np.asarray(report["coef"], dtype=float)
    true_coef = np.asarray(truth["true_coef"], dtype=float)
    if coef.shape != true_coef.shape:
        raise InvalidDataError(
            f"report has {coef.size} coefficients, truth has {true_coef.size}"
        )
    counts = metrics.confusion_counts(coef, true_coef)
    sens, spec = metrics.sensitivity_specificity(counts)
    out = {
        "method": report.get("method"),
        "counts": {"tp": counts.tp, "tn": counts.tn, "fp": counts.fp, "fn": counts.fn},
        "mcc": metrics.mcc(counts),
        "sensitivity": sens,
        "specificity": spec,
    }
    gl = truth.get("good_leverage_predictors") or []
    if len(gl):
        out["specificity_contaminated"] = _specificity_on(coef, true_coef, gl)
    if args.test_data is not None:
        X, y = dataio.read_dataset_csv(args.test_data)
        if X.shape[1] != coef.size:
            raise InvalidDataError(f"test data has {X.shape[1]} predictors, report {coef.size}")
        from .scales import tau_scale

        preds = report["intercept"] + X @ coef
        errors = y - preds
        out["tau"] = tau_scale(errors, cutoff=args.tau_cutoff)
        out["rmse"] = float(np.sqrt(np.mean(errors**2)))
        out["tau_ratio"] = metrics.prediction_tau_ratio(
            preds, y, float(truth["true_scale"]), args.tau_cutoff
        )
        if args.reference is not None:
            ref = dataio.read_json(args.reference)
            rcoef = np.asarray(ref["coef"], dtype=float)
            if rcoef.shape != coef.shape:
                raise InvalidDataError("reference report dimensions do not match")
            rerr = y - (ref["intercept"] + X @ rcoef)
            out["rpp"] = metrics.relative_prediction_performance(
                out["tau"], tau_scale(rerr, cutoff=args.tau_cutoff)
            )
            out["rpp_rmse"] = metrics.relative_prediction_performance(
                out["rmse"], float(np.sqrt(np.mean(rerr**2)))
            )
    dataio.write_metrics_json(args.out, out)
    print(f"evaluate: mcc={out['mcc']:.4f} sens={sens:.4f} spec={spec:.4f} -> {args.out}")
    return 0


def _emit(fh, method, p, nu, contamination, seed, metric, value):
    fh.write(f"{method},{p},{nu:g},{contamination},{seed},{metric},{value!r}\n")
    fh.flush()


def _reproduce_good_leverage(args, fh, methods):
    from . import metrics, simdata

    for seed in range(args.seed, args.seed + args.seeds):
        data = simdata.generate_good_leverage_example(seed, knob=args.leverage - 1.0)
        for method in methods:
            fit = _fitter(method)(data.X, data.y, _cv_config_seeded(args, method, seed))
            counts = metrics.confusion_counts(fit.coef, data.true_coef)
            sens, spec = metrics.sensitivity_specificity(counts)
            spec_cont = _specificity_on(fit.coef, data.true_coef, data.good_leverage_predictors)
            for name, value in (
                ("mcc", metrics.mcc(counts)),
                ("sensitivity", sens),
                ("specificity", spec),
                ("specificity-contaminated", spec_cont),
            ):
                _emit(fh, method, 32, 2.0, "contaminated", seed, name, float(value))


def _cv_config_seeded(args, method, seed):
    import dataclasses

    return dataclasses.replace(_cv_config(args, method), seed=seed)


def _reproduce_scenario(args, fh, methods, variant):
    import numpy as np

    from . import metrics, simdata
    from .scales import tau_scale

    ps = args.p if args.p is not None else [32]
    nus = args.nu if args.nu is not None else [2.0]
    flags = {"both": (False, True), "clean": (False,), "contaminated": (True,)}[args.contamination]
    n = 200 if variant == "one" else 100
    for p in ps:
        for nu in nus:
            for contaminated in flags:
                label = "contaminated" if contaminated else "clean"
                for seed in range(args.seed, args.seed + args.seeds):
                    train_cfg = simdata.ScenarioConfig(
                        variant=variant, n=n, p=p, nu=nu,
                        contaminated=contaminated, seed=seed, leverage=args.leverage,
                    )
                    train = simdata.generate(train_cfg)
                    test = simdata.generate(
                        simdata.ScenarioConfig(
                            variant=variant, n=args.test_n, p=p, nu=nu,
                            contaminated=False, seed=seed + _TEST_SEED_OFFSET, leverage=1.0,
                        )
                    )
                    taus = {}
                    rmses = {}
                    for method in methods:
                        fit = _fitter(method)(
                            train.X, train.y, _cv_config_seeded(args, method, seed)
                        )
                        errors = test.y - fit.predict(test.X)
                        taus[method] = tau_scale(errors, cutoff=args.tau_cutoff)
                        rmses[method] = float(np.sqrt(np.mean(errors**2)))
                        counts = metrics.confusion_counts(fit.coef, train.true_coef)
                        sens, spec = metrics.sensitivity_specificity(counts)
                        for name, value in (
                            ("tau-ratio", taus[method] / train.true_scale),
                            ("mcc", metrics.mcc(counts)),
                            ("sensitivity", sens),
                            ("specificity", spec),
                        ):
                            _emit(fh, method, p, nu, label, seed, name, float(value))
                    if "adaptive-senet" in taus:
                        ref = "adaptive-senet"
                        for method in methods:
                            if method == ref:
                                continue
                            if nu == 2.0:
                                rpp = metrics.relative_prediction_performance(
                                    rmses[method], rmses[ref]
                                )
                            else:
                                rpp = metrics.relative_prediction_performance(
                                    taus[method], taus[ref]
                                )
                            _emit(fh, method, p, nu, label, seed, "rpp", float(rpp))


def cmd_reproduce(args):
    from . import dataio, kernels

    kernels.set_threads(args.threads)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise InvalidParameterError(f"unknown method {m!r}; choose from {METHODS}")
    cfg_path = args.out + ".config.json"
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(REPRODUCE_HEADER + "\n")
        fh.flush()
        if args.figure == "good-leverage":
            _reproduce_good_leverage(args, fh, methods)
        elif args.figure.startswith("scenario1"):
            _reproduce_scenario(args, fh, methods, "one")
        else:
            _reproduce_scenario(args, fh, methods, "alternative")
    dataio.write_json(
        cfg_path,
        {
            "format": "robustenet/reproduce-config",
            "figure": args.figure,
            "seeds": args.seeds,
            "p": args.p,
            "nu": args.nu,
            "contamination": args.contamination,
            "methods": methods,
            "test_n": args.test_n,
            "leverage": args.leverage,
            "cv": _cv_config(args, "adaptive-senet"),
        },
    )
    print(f"reproduce: {args.figure} -> {args.out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    # the batched kernels size their thread pool at first import
    os.environ["NUMBA_NUM_THREADS"] = str(max(1, args.threads))
    try:
        return args.func(args)
    except InvalidParameterError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except InvalidDataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ConvergenceError, ExactFitError, InvalidPreliminaryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
