import numpy as np
import pytest

from robustenet.errors import InvalidParameterError
from robustenet.metrics import prediction_tau_ratio
from robustenet.simdata import (
    ScenarioConfig,
    generate,
    generate_alternative_scenario,
    generate_good_leverage_example,
    generate_scenario_one,
    sample_stable,
)


def test_stable_sampler_gaussian_case():
    z = sample_stable(2.0, 300_000, seed=1)
    # nu = 2 is Normal with variance 2 in this parameterization
    assert abs(float(z.var()) - 2.0) < 0.03
    assert abs(float(z.mean())) < 0.02


def test_stable_sampler_cauchy_case():
    z = sample_stable(1.0, 100_000, seed=2)
    assert abs(float(np.median(z))) < 0.02
    q75, q25 = np.percentile(z, [75, 25])
    assert abs((q75 - q25) / 2.0 - 1.0) < 0.05  # Cauchy IQR is 2


def test_stable_sampler_heavy_tails_between():
    z = sample_stable(1.5, 200_000, seed=3)
    g = sample_stable(2.0, 200_000, seed=3)
    # tail mass beyond 8 grows as nu drops
    assert np.mean(np.abs(z) > 8.0) > 5 * np.mean(np.abs(g) > 8.0)


def test_stable_sampler_deterministic():
    a = sample_stable(1.7, 100, seed=4)
    b = sample_stable(1.7, 100, seed=4)
    assert np.array_equal(a, b)
    c = sample_stable(1.7, 100, seed=5)
    assert not np.array_equal(a, c)


def test_stable_sampler_validation():
    with pytest.raises(InvalidParameterError):
        sample_stable(0.0, 10, seed=0)
    with pytest.raises(InvalidParameterError):
        sample_stable(2.5, 10, seed=0)


def test_scenario_one_shapes_and_bookkeeping():
    d = generate_scenario_one(n=200, p=64, nu=2.0, contaminated=True, seed=0)
    assert d.X.shape == (200, 64)
    assert d.y.shape == (200,)
    s = int(np.log2(64))
    assert np.array_equal(d.true_coef[:s], np.ones(s))
    assert np.all(d.true_coef[s:] == 0.0)
    assert np.array_equal(d.contaminated_rows, np.arange(20))  # n // 10
    assert len(d.contaminated_predictors) == s  # log2(p) corrupted columns
    assert np.all(d.true_coef[d.contaminated_predictors] == 0.0)  # irrelevant only
    assert len(d.good_leverage_rows) == 40  # n // 5
    assert len(d.good_leverage_predictors) == (64 - s) // 2
    # good-leverage rows never overlap the contaminated block
    assert not set(d.good_leverage_rows.tolist()) & set(d.contaminated_rows.tolist())
    assert d.true_scale > 0.0


def test_scenario_one_clean_has_no_contamination():
    d = generate_scenario_one(n=100, p=32, nu=2.0, contaminated=False, seed=1)
    assert d.contaminated_rows.size == 0
    assert d.contaminated_predictors.size == 0
    # the good-leverage block is part of the design and stays
    assert d.good_leverage_rows.size == 20


def test_scenario_one_group_correlation_structure():
    d = generate_scenario_one(n=4000, p=32, nu=2.0, contaminated=False, seed=2, leverage=1.0)
    C = np.corrcoef(d.X.T)
    # proxies of one latent are strongly correlated: {0,1,2} and {6,7,8}
    # share a group under the blocked index map with 3 predictors per group
    assert C[0, 1] > 0.9 and C[1, 2] > 0.9
    assert C[6, 7] > 0.9 and C[7, 8] > 0.9
    # across groups only the weak latent correlation 0.1 shows through
    assert 0.0 < C[0, 3] < 0.3
    assert 0.0 < C[6, 9] < 0.3


def test_scenario_one_signal_fraction():
    # clean Normal-error cell: relevant part explains ~25% of response variance
    d = generate_scenario_one(n=60_000, p=32, nu=2.0, contaminated=False, seed=3, leverage=1.0)
    signal = d.X[:, :5] @ d.true_coef[:5]
    frac = float(np.var(signal) / np.var(d.y))
    assert abs(frac - 0.25) < 0.02


def test_scenario_one_oracle_tau_ratio_near_one():
    d = generate_scenario_one(n=10_000, p=8, nu=2.0, contaminated=False, seed=4, leverage=1.0)
    pred = d.X @ d.true_coef
    ratio = prediction_tau_ratio(pred, d.y, d.true_scale)
    assert abs(ratio - 1.0) < 0.05


def test_scenario_one_oracle_tau_ratio_heavy_tail():
    d = generate_scenario_one(n=10_000, p=8, nu=1.5, contaminated=False, seed=5, leverage=1.0)
    ratio = prediction_tau_ratio(d.X @ d.true_coef, d.y, d.true_scale)
    assert abs(ratio - 1.0) < 0.05


def test_scenario_one_contaminated_rows_follow_inverted_model():
    d = generate_scenario_one(n=400, p=32, nu=2.0, contaminated=True, seed=6)
    rows = d.contaminated_rows
    bad_sum = d.X[np.ix_(rows, d.contaminated_predictors)].sum(axis=1)
    r = np.corrcoef(bad_sum, d.y[rows])[0, 1]
    assert r < -0.9
    # every contaminated cell of a column has the same magnitude (the
    # pre-modification column extreme times the leverage factor)
    cells = np.abs(d.X[np.ix_(rows, d.contaminated_predictors)])
    assert np.allclose(cells, cells[0], rtol=1e-12)
    # columns untouched by the good-leverage multiplier: the planted cell
    # dominates everything the clean rows show
    colmax = np.max(np.abs(np.delete(d.X, rows, axis=0)), axis=0)
    plain = np.setdiff1d(d.contaminated_predictors, d.good_leverage_predictors)
    if plain.size:
        pos = [list(d.contaminated_predictors).index(j) for j in plain]
        assert np.all(cells[0, pos] >= colmax[plain] * 0.99)


def test_scenario_one_determinism_and_seed_dependence():
    a = generate_scenario_one(n=50, p=16, seed=7)
    b = generate_scenario_one(n=50, p=16, seed=7)
    c = generate_scenario_one(n=50, p=16, seed=8)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.X, c.X)


def test_scenario_one_leverage_multiplier_applies_to_block():
    base = generate_scenario_one(n=100, p=32, contaminated=False, seed=9, leverage=1.0)
    lev = generate_scenario_one(n=100, p=32, contaminated=False, seed=9, leverage=10.0)
    rows, cols = base.good_leverage_rows, base.good_leverage_predictors
    block = np.ix_(rows, cols)
    assert np.allclose(lev.X[block], 10.0 * base.X[block])
    mask = np.ones(32, bool)
    mask[cols] = False
    assert np.array_equal(lev.X[np.ix_(rows, np.flatnonzero(mask))],
                          base.X[np.ix_(rows, np.flatnonzero(mask))])
    # responses are untouched: the leverage is "good"
    assert np.array_equal(lev.y, base.y)


def test_alternative_scenario_bookkeeping():
    d = generate_alternative_scenario(seed=0)
    assert d.X.shape == (100, 32)
    assert d.contaminated_rows.size == 25  # one quarter of the sample
    assert d.contaminated_predictors.size == 5 + 2  # log2(p) irrelevant + 2 relevant
    rel = set(np.flatnonzero(d.true_coef).tolist())
    overlap = rel & set(d.contaminated_predictors.tolist())
    assert len(overlap) == 2
    assert d.good_leverage_predictors.size <= 5
    assert not set(d.good_leverage_predictors.tolist()) & set(d.contaminated_predictors.tolist())
    assert np.all(d.true_coef[d.good_leverage_predictors] == 0.0)


def test_alternative_scenario_ar1_correlation():
    d = generate_alternative_scenario(n=6000, contaminated=False, seed=1, leverage=1.0)
    C = np.corrcoef(d.X.T)
    assert C[10, 11] == pytest.approx(0.5, abs=0.06)
    assert C[10, 12] == pytest.approx(0.25, abs=0.06)


def test_good_leverage_example_knob_zero_is_clean_base():
    a = generate_good_leverage_example(seed=3, knob=0.0)
    b = generate_good_leverage_example(seed=3, knob=0.0)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    assert a.contaminated_rows.size == 0


def test_good_leverage_example_knob_scales_cells():
    base = generate_good_leverage_example(seed=3, knob=0.0)
    k = generate_good_leverage_example(seed=3, knob=9.0)
    assert k.contaminated_rows.tolist() == [0, 1, 2, 3, 4]
    assert k.good_leverage_rows.tolist() == list(range(5, 15))
    # leveraged cells are the base design times (1 + knob)
    gl = np.ix_(k.good_leverage_rows, k.good_leverage_predictors)
    assert np.allclose(k.X[gl], 10.0 * base.X[gl])
    bad = np.ix_(k.contaminated_rows, k.contaminated_predictors)
    assert np.allclose(k.X[bad], 10.0 * base.X[bad])
    # responses of the good-leverage rows still follow the model
    assert np.array_equal(k.y[5:], base.y[5:])
    assert not np.array_equal(k.y[:5], base.y[:5])
    # bad predictors are relevant, good-leverage predictors are not
    assert np.all(k.true_coef[k.contaminated_predictors] == 1.0)
    assert np.all(k.true_coef[k.good_leverage_predictors] == 0.0)


def test_good_leverage_example_signal_fraction():
    d = generate_good_leverage_example(seed=4, knob=0.0)
    assert int(d.true_coef.sum()) == 5
    assert d.X.shape == (100, 32)
    assert d.true_scale > 0.0


def test_generate_dispatch_and_validation():
    cfg = ScenarioConfig(variant="one", n=40, p=16, nu=2.0, contaminated=True, seed=0)
    d = generate(cfg)
    assert (d.config.variant, d.config.n, d.config.p) == ("one", 40, 16)
    with pytest.raises(InvalidParameterError):
        ScenarioConfig(variant="one", n=40, p=17, nu=2.0, contaminated=True, seed=0)
    with pytest.raises(InvalidParameterError):
        ScenarioConfig(variant="one", n=10, p=16, nu=2.0, contaminated=True, seed=0)
    with pytest.raises(InvalidParameterError):
        ScenarioConfig(variant="one", n=40, p=16, nu=2.4, contaminated=True, seed=0)
    with pytest.raises(InvalidParameterError):
        ScenarioConfig(variant="nope", n=40, p=16, nu=2.0, contaminated=True, seed=0)


def test_generate_good_leverage_respects_clean_flag():
    cfg = ScenarioConfig(
        variant="good-leverage", n=100, p=32, nu=2.0,
        contaminated=False, seed=3, leverage=10.0,
    )
    d = generate(cfg)
    assert d.contaminated_rows.size == 0
    base = generate_good_leverage_example(seed=3, knob=0.0)
    assert np.array_equal(d.X, base.X)


def test_relevant_property():
    d = generate_scenario_one(n=40, p=16, seed=11)
    assert np.array_equal(d.relevant, np.arange(4))
