import numpy as np
import pytest

from robustenet.cv import (
    CvConfig,
    CvEntry,
    fit_adaptive_s_enet_cv,
    fit_ls_enet_cv,
    fit_path,
    fit_s_enet_cv,
    repeated_kfold,
    select_min,
    select_one_se,
    standardize,
    standardize_classical,
)
from robustenet.errors import (
    ConvergenceError,
    InvalidDataError,
    InvalidParameterError,
)


def _instance(seed, n=90, p=12, outliers=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * rng.uniform(0.5, 4.0, p) + rng.normal(0, 3, p)
    beta = np.zeros(p)
    beta[:3] = [1.5, -2.0, 1.0]
    y = 2.0 + X @ beta + rng.standard_normal(n)
    if outliers:
        y[:outliers] += 40.0
    return X, y


QUICK = dict(n_reps=2, n_lambdas=12, alphas=(0.75,), exponents=(1.0,), seed=5)


def test_repeated_kfold_partitions():
    splits = repeated_kfold(23, 5, 3, seed=7)
    assert len(splits) == 3
    for rep in splits:
        assert len(rep) == 5
        joined = np.concatenate(rep)
        assert np.array_equal(np.sort(joined), np.arange(23))
        sizes = sorted(f.size for f in rep)
        assert sizes[-1] - sizes[0] <= 1


def test_repeated_kfold_deterministic_and_seed_sensitive():
    a = repeated_kfold(40, 4, 2, seed=1)
    b = repeated_kfold(40, 4, 2, seed=1)
    c = repeated_kfold(40, 4, 2, seed=2)
    for fa, fb in zip(a[0], b[0]):
        assert np.array_equal(fa, fb)
    assert any(not np.array_equal(fa, fc) for fa, fc in zip(a[0], c[0]))


def test_repeated_kfold_validation():
    with pytest.raises(InvalidParameterError):
        repeated_kfold(10, 1, 1, seed=0)
    with pytest.raises(InvalidParameterError):
        repeated_kfold(4, 5, 1, seed=0)


def test_standardize_round_trip():
    X, y = _instance(8)
    Xs, ys, rec = standardize(X, y)
    # coefficients found on the standardized scale predict identically after
    # the back-transform
    rng = np.random.default_rng(9)
    beta_s = rng.normal(0, 1, X.shape[1])
    mu_s = 0.7
    pred_s = mu_s + Xs @ beta_s + rec.y_center
    mu_o, beta_o = rec.coef_to_original(mu_s, beta_s)
    pred_o = mu_o + X @ beta_o
    assert np.allclose(pred_s, pred_o, atol=1e-10)
    Xs2 = rec.transform(X)
    assert np.allclose(Xs, Xs2)


def test_standardize_robust_to_outlier_rows():
    X, y = _instance(10, n=120)
    Xdirty = X.copy()
    Xdirty[:6] += 500.0
    _, _, clean = standardize(X, y)
    _, _, dirty = standardize(Xdirty, y)
    # centres and scales barely move under 5% contamination
    assert np.max(np.abs(clean.x_center - dirty.x_center)) < 1.0
    assert np.max(np.abs(clean.x_scale / dirty.x_scale - 1.0)) < 0.2


def test_standardize_gaussian_scale_near_sd():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((4000, 3)) * np.array([1.0, 2.5, 0.3])
    _, _, rec = standardize(X, rng.standard_normal(4000))
    assert np.allclose(rec.x_scale, [1.0, 2.5, 0.3], rtol=0.08)


def test_standardize_rejects_constant_column():
    X, y = _instance(12)
    X[:, 4] = 3.0
    with pytest.raises(InvalidDataError) as exc:
        standardize(X, y)
    assert "4" in str(exc.value)


def test_standardize_classical_matches_numpy():
    X, y = _instance(13)
    Xs, ys, rec = standardize_classical(X, y)
    assert np.allclose(rec.x_center, X.mean(axis=0))
    assert np.allclose(rec.x_scale, X.std(axis=0, ddof=1))
    assert rec.y_center == pytest.approx(y.mean())
    assert np.allclose(Xs.mean(axis=0), 0.0, atol=1e-12)


def _entry(mean, se, n_active, lam, alpha=1.0, exponent=None, fit="x"):
    return CvEntry(
        alpha=alpha, exponent=exponent, lam=lam, mean=mean, se=se,
        n_reps_valid=5, n_active=n_active, fit=fit,
    )


def test_select_min_ignores_unselectable():
    entries = [
        _entry(np.nan, 0.1, 3, 1.0),
        _entry(0.5, 0.1, 4, 0.5),
        _entry(0.4, 0.1, 5, 0.25, fit=None),  # missing fit: unselectable
        _entry(0.45, 0.1, 5, 0.1),
    ]
    assert select_min(entries) == 3


def test_select_min_all_invalid_raises():
    entries = [_entry(np.nan, 0.1, 3, 1.0), _entry(0.2, 0.0, 2, 0.5, fit=None)]
    with pytest.raises(ConvergenceError):
        select_min(entries)


def test_one_se_prefers_sparser_within_band():
    entries = [
        _entry(0.50, 0.05, 1, 2.0),   # within band, sparsest
        _entry(0.47, 0.05, 3, 1.0),
        _entry(0.45, 0.05, 5, 0.5),   # minimizer, threshold 0.50
        _entry(0.60, 0.05, 0, 4.0),   # outside band
    ]
    assert select_one_se(entries) == 0


def test_one_se_tiebreaks_on_lambda_then_alpha():
    entries = [
        _entry(0.45, 0.05, 2, 1.0, alpha=0.5),
        _entry(0.46, 0.05, 2, 2.0, alpha=0.5),   # same sparsity, bigger lam wins
        _entry(0.47, 0.05, 2, 2.0, alpha=0.75),  # same lam, bigger alpha wins
    ]
    assert select_one_se(entries) == 2


def test_cv_config_validation():
    with pytest.raises(InvalidParameterError):
        CvConfig(bdp=0.6)
    with pytest.raises(InvalidParameterError):
        CvConfig(alphas=())
    with pytest.raises(InvalidParameterError):
        CvConfig(alphas=(0.0,))
    with pytest.raises(InvalidParameterError):
        CvConfig(exponents=(0.5,))
    with pytest.raises(InvalidParameterError):
        CvConfig(scorer="mse")
    with pytest.raises(InvalidParameterError):
        CvConfig(seed=-1)


def test_adaptive_cv_recovers_support_under_outliers():
    X, y = _instance(14, outliers=9)
    fit = fit_adaptive_s_enet_cv(X, y, CvConfig(**QUICK))
    assert set(fit.active_set.tolist()) == {0, 1, 2}
    assert fit.method == "adaptive-senet"
    assert fit.preliminary is not None
    assert np.isfinite(fit.cv_mean) and fit.cv_se >= 0.0
    # predictions run on the raw scale
    med_err = float(np.median(np.abs(y[9:] - fit.predict(X[9:]))))
    assert med_err < 2.0


def test_adaptive_cv_deterministic():
    X, y = _instance(15, outliers=5)
    f1 = fit_adaptive_s_enet_cv(X, y, CvConfig(**QUICK))
    f2 = fit_adaptive_s_enet_cv(X, y, CvConfig(**QUICK))
    assert f1.lam == f2.lam
    assert f1.intercept == f2.intercept
    assert np.array_equal(f1.coef, f2.coef)
    assert [e.mean for e in f1.entries] == [e.mean for e in f2.entries]


def test_senet_cv_smoke():
    X, y = _instance(16, outliers=5)
    fit = fit_s_enet_cv(X, y, CvConfig(**QUICK))
    assert fit.method == "senet"
    assert fit.exponent is None
    assert fit.preliminary is None
    assert {0, 1, 2} <= set(fit.active_set.tolist())


def test_ls_enet_cv_clean_data():
    X, y = _instance(17)
    cfg = CvConfig(n_reps=2, n_lambdas=15, alphas=(1.0,), seed=3, scorer="mae")
    fit = fit_ls_enet_cv(X, y, cfg)
    assert fit.method == "ls-enet"
    assert {0, 1, 2} <= set(fit.active_set.tolist())
    resid = y - fit.predict(X)
    assert float(np.sqrt(np.mean(resid**2))) < 1.5


def test_scorer_changes_selection_surface():
    X, y = _instance(18, outliers=12)
    base = dict(QUICK)
    tau_fit = fit_s_enet_cv(X, y, CvConfig(**{**base, "scorer": "tau"}))
    rmse_fit = fit_s_enet_cv(X, y, CvConfig(**{**base, "scorer": "rmse"}))
    t = np.array([e.mean for e in tau_fit.entries])
    r = np.array([e.mean for e in rmse_fit.entries])
    # rmse means are inflated by the outlier rows, tau means are not
    assert np.nanmedian(r) > 2.0 * np.nanmedian(t)


def test_fit_path_returns_original_scale_fits():
    X, y = _instance(19)
    lambdas, fits, rec = fit_path(X, y, 0.75, CvConfig(**QUICK))
    assert len(lambdas) == len(fits) == 12
    ok = [f for f in fits if f is not None]
    assert ok
    f = ok[-1]
    pred = f.intercept + X @ f.coef
    assert np.isfinite(pred).all()
    med = float(np.median(np.abs(y - pred)))
    assert med < 3.0


def test_cv_fit_scale_consistency_on_clean_gaussian():
    rng = np.random.default_rng(20)
    n, p = 400, 5
    X = rng.standard_normal((n, p))
    y = X @ np.array([2.0, -1.0, 0.0, 0.0, 0.0]) + 1.3 * rng.standard_normal(n)
    fit = fit_s_enet_cv(X, y, CvConfig(n_reps=2, n_lambdas=12, alphas=(1.0,), seed=6))
    # reported scale estimates the residual standard deviation
    assert fit.scale == pytest.approx(1.3, rel=0.15)
