"""Synthetic data generators for the simulation scenarios.

Three families, all pure functions of (parameters, seed):

* a latent-group design where blocks of predictors share a heavy-tailed
  latent factor, with optional joint leverage/response contamination;
* a harder low-sample variant with AR(1)-correlated heavy-tailed predictors
  and more aggressive contamination;
* a small fixed illustration where good leverage points sit in irrelevant
  predictors and a handful of rows carry response outliers with leverage in
  relevant predictors.

Noise levels are calibrated against a large fixed-seed population sample so
the clean signal explains a prescribed fraction of the response variation:
the fraction is measured by the variance for gaussian noise and by the
squared tau-scale for heavy-tailed noise (whose variance may not exist).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError
from .scales import tau_scale

__all__ = [
    "ScenarioConfig",
    "GeneratedData",
    "sample_stable",
    "generate",
    "generate_scenario_one",
    "generate_alternative_scenario",
    "generate_good_leverage_example",
]

VARIANTS = ("one", "alternative", "good-leverage")

# size and root seed of the internal population sample used to calibrate
# noise scales; independent of all user-facing seeds
_POP_SIZE = 1_000_000
_POP_ROOT = 730_544_963


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one synthetic dataset."""

    variant: str = "one"
    n: int = 200
    p: int = 32
    nu: float = 2.0
    contaminated: bool = True
    seed: int = 0
    leverage: float = 10.0
    k_lev: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (0.0 < self.nu <= 2.0):
            raise InvalidParameterError(f"nu must lie in (0, 2], got {self.nu!r}")
        if self.seed < 0:
            raise InvalidParameterError("seed must be >= 0")
        if self.variant in ("one", "alternative"):
            if self.p < 8 or (self.p & (self.p - 1)) != 0:
                raise InvalidParameterError(
                    f"p must be a power of two >= 8 (the sparsity level is log2 p), got {self.p!r}"
                )
            if self.n < 20:
                raise InvalidParameterError("n must be >= 20")
        if self.leverage <= 0.0:
            raise InvalidParameterError("leverage factor must be positive")
        if self.k_lev is not None and self.k_lev <= 0.0:
            raise InvalidParameterError("k_lev must be positive")


@dataclass
class GeneratedData:
    """One synthetic dataset plus the ground truth needed for evaluation."""

    X: np.ndarray
    y: np.ndarray
    true_coef: np.ndarray
    true_scale: float
    contaminated_rows: np.ndarray
    contaminated_predictors: np.ndarray
    good_leverage_rows: np.ndarray
    good_leverage_predictors: np.ndarray
    config: ScenarioConfig

    @property
    def relevant(self):
        return np.flatnonzero(self.true_coef)


def _stable_draws(rng, nu, size):
    # Chambers-Mallows-Stuck; nu=2 reduces to N(0, 2), nu=1 to standard Cauchy
    theta = rng.uniform(-np.pi / 2, np.pi / 2, size)
    w = rng.standard_exponential(size)
    if nu == 2.0:
        return 2.0 * np.sin(theta) * np.sqrt(w)
    if nu == 1.0:
        return np.tan(theta)
    a = np.sin(nu * theta) / np.cos(theta) ** (1.0 / nu)
    b = (np.cos((1.0 - nu) * theta) / w) ** ((1.0 - nu) / nu)
    return a * b


def sample_stable(nu, size, seed=0):
    """i.i.d. symmetric alpha-stable draws (CMS construction).

    Standard symmetric parameterization: nu=2 gives N(0, 2) and nu=1 the
    standard Cauchy. ``seed`` may be an integer or a numpy Generator.
    """
    if not (0.0 < nu <= 2.0):
        raise InvalidParameterError(f"nu must lie in (0, 2], got {nu!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _stable_draws(rng, float(nu), int(size))


@lru_cache(maxsize=8)
def _noise_population(nu_key):
    nu = nu_key / 1e9
    rng = np.random.default_rng(np.random.SeedSequence([_POP_ROOT, 1, nu_key]))
    return _stable_draws(rng, nu, _POP_SIZE)


def _noise_measure(nu):
    pop = _noise_population(int(round(nu * 1e9)))
    if nu == 2.0:
        return float(np.var(pop))
    return tau_scale(pop) ** 2


def _noise_tau(nu):
    return tau_scale(_noise_population(int(round(nu * 1e9))))


def _t4_rows(rng, n, chol):
    """n rows of a unit-variance multivariate t (4 df) with the given correlation factor."""
    g = rng.standard_normal((n, chol.shape[0]))
    w = rng.chisquare(4.0, n)
    return (g @ chol.T) / np.sqrt(w / 4.0)[:, None] / np.sqrt(2.0)


def _group_index(p, s, group_size):
    j = np.arange(p)
    return j // group_size + (j >= s)


@lru_cache(maxsize=32)
def _signal_measure(variant, p, s, normal_noise):
    """Population spread of the clean signal sum(x_j, j < s), same measure as the noise."""
    rng = np.random.default_rng(np.random.SeedSequence([_POP_ROOT, 2, p, s]))
    if variant == "one":
        group_size = int(1 + np.sqrt(p) / 2)
        gidx = _group_index(p, s, group_size)[:s]
        n_groups = int(gidx.max()) + 1
        counts = np.bincount(gidx, minlength=n_groups).astype(float)
        corr = np.full((n_groups, n_groups), 0.1)
        np.fill_diagonal(corr, 1.0)
        z = _t4_rows(rng, _POP_SIZE, np.linalg.cholesky(corr))
        sig = z @ counts + rng.standard_normal(_POP_SIZE) * (0.2 * np.sqrt(s))
    else:
        corr = 0.5 ** np.abs(np.subtract.outer(np.arange(s), np.arange(s)))
        z = _t4_rows(rng, _POP_SIZE, np.linalg.cholesky(corr))
        sig = z.sum(axis=1)
    if normal_noise:
        return float(np.var(sig))
    return tau_scale(sig) ** 2


def _error_sigma(variant, p, s, nu, explained=0.25):
    """Noise multiplier making the clean model explain the given variation share."""
    ratio = (1.0 - explained) / explained
    return float(np.sqrt(ratio * _signal_measure(variant, p, s, nu == 2.0) / _noise_measure(nu)))


def _contaminate_cells(X, rows, cols, k_lev):
    """Push the selected cells to k_lev times the column maximum, keeping signs."""
    colmax = np.max(np.abs(X), axis=0)
    for j in cols:
        X[rows, j] = np.sign(X[rows, j]) * k_lev * colmax[j]


def _contaminated_response(rng, X, rows, cols, slope):
    """Response from the contamination model, noise at 91% explained variation."""
    sig = slope * X[np.ix_(rows, cols)].sum(axis=1)
    sd = np.sqrt(np.var(sig) * (9.0 / 91.0))
    return sig + rng.standard_normal(rows.size) * sd


def _top_leverage_rows(X, exclude, cov, count):
    """Indices of the ``count`` non-excluded rows with largest Mahalanobis distance."""
    mask = np.ones(X.shape[0], dtype=bool)
    mask[exclude] = False
    rows = np.flatnonzero(mask)
    solved = np.linalg.solve(cov, X[rows].T)
    md2 = np.einsum("ij,ji->i", X[rows], solved)
    order = np.argsort(-md2, kind="stable")
    return np.sort(rows[order[:count]])


def generate_scenario_one(n, p, nu=2.0, contaminated=True, seed=0, leverage=10.0, k_lev=2.0):
    """Latent-group design: blocks of predictors sharing a heavy-tailed factor.

    Predictors are x_ij = Z_{i,g(j)} + noise(sd 0.2) with unit-variance t(4 df)
    latents of pairwise correlation 0.1 and g(j) = floor(j/group_size) + [j >= s]
    (0-based), so relevant predictors (the first s = log2 p, coefficient 1)
    never share a latent with irrelevant ones. Within-group correlation is
    about 0.96. Noise is symmetric stable(nu), scaled so the model explains
    25% of the response variation.

    With ``contaminated``, the first n/10 rows get leverage in log2(p) random
    irrelevant predictors (cells pushed to +-k_lev times the column maximum)
    and their responses switched to y = -sum of those contaminated cells plus
    gaussian noise at 91% explained variation. In every setting the n/5
    non-contaminated rows with largest true-covariance Mahalanobis distance
    get their trailing (p-s)/2 predictors multiplied by ``leverage`` (good
    leverage: those predictors are irrelevant, so the model still holds).
    """
    cfg = ScenarioConfig("one", n, p, nu, contaminated, seed, leverage, k_lev)
    s = p.bit_length() - 1
    group_size = int(1 + np.sqrt(p) / 2)
    gidx = _group_index(p, s, group_size)
    n_groups = int(gidx.max()) + 1
    corr_z = np.full((n_groups, n_groups), 0.1)
    np.fill_diagonal(corr_z, 1.0)

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    Z = _t4_rows(rng, n, np.linalg.cholesky(corr_z))
    X = Z[:, gidx] + rng.standard_normal((n, p)) * 0.2
    eps = _stable_draws(rng, nu, n)
    sigma_e = _error_sigma("one", p, s, nu)
    y = X[:, :s].sum(axis=1) + sigma_e * eps

    if contaminated:
        crows = np.arange(n // 10)
        cpred = np.sort(rng.choice(np.arange(s, p), size=s, replace=False))
        _contaminate_cells(X, crows, cpred, k_lev)
        y[crows] = _contaminated_response(rng, X, crows, cpred, -1.0)
    else:
        crows = np.empty(0, dtype=int)
        cpred = np.empty(0, dtype=int)

    cov = corr_z[gidx][:, gidx] + np.eye(p) * 0.04
    glrows = _top_leverage_rows(X, crows, cov, n // 5)
    glcols = np.arange(p - (p - s) // 2, p)
    X[np.ix_(glrows, glcols)] *= leverage

    beta = np.zeros(p)
    beta[:s] = 1.0
    return GeneratedData(
        X=X, y=y, true_coef=beta, true_scale=sigma_e * _noise_tau(nu),
        contaminated_rows=crows, contaminated_predictors=cpred,
        good_leverage_rows=glrows, good_leverage_predictors=glcols, config=cfg,
    )


def generate_alternative_scenario(n=100, p=32, nu=2.0, contaminated=True, seed=0,
                                  leverage=10.0, k_lev=256.0):
    """Harder low-sample variant: AR(1) heavy-tailed predictors, 25% contamination.

    Predictors are unit-variance multivariate t (4 df) with correlation
    0.5^|j-j'|; the first s = log2 p have coefficient 1 and noise is scaled to
    25% explained variation as in :func:`generate_scenario_one`. Contamination
    hits the first n/4 rows: leverage in log2(p) random irrelevant predictors
    plus 2 random relevant ones (k_lev = 256 by default), responses from the
    contamination model with slope -3. Good leverage goes into at most
    log2(p) trailing irrelevant predictors outside the contaminated set.
    """
    cfg = ScenarioConfig("alternative", n, p, nu, contaminated, seed, leverage, k_lev)
    s = p.bit_length() - 1
    corr = 0.5 ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    X = _t4_rows(rng, n, np.linalg.cholesky(corr))
    eps = _stable_draws(rng, nu, n)
    sigma_e = _error_sigma("alternative", p, s, nu)
    y = X[:, :s].sum(axis=1) + sigma_e * eps

    if contaminated:
        crows = np.arange(n // 4)
        cpred = np.sort(
            np.concatenate(
                [
                    rng.choice(np.arange(s, p), size=s, replace=False),
                    rng.choice(np.arange(s), size=2, replace=False),
                ]
            )
        )
        _contaminate_cells(X, crows, cpred, k_lev)
        y[crows] = _contaminated_response(rng, X, crows, cpred, -3.0)
    else:
        crows = np.empty(0, dtype=int)
        cpred = np.empty(0, dtype=int)

    taken = set(cpred.tolist())
    trailing = [j for j in range(p - 1, s - 1, -1) if j not in taken][:s]
    glcols = np.array(sorted(trailing), dtype=int)
    glrows = _top_leverage_rows(X, crows, corr, n // 5)
    X[np.ix_(glrows, glcols)] *= leverage

    beta = np.zeros(p)
    beta[:s] = 1.0
    return GeneratedData(
        X=X, y=y, true_coef=beta, true_scale=sigma_e * _noise_tau(nu),
        contaminated_rows=crows, contaminated_predictors=cpred,
        good_leverage_rows=glrows, good_leverage_predictors=glcols, config=cfg,
    )


def generate_good_leverage_example(seed=0, knob=9.0):
    """Fixed illustration: good leverage in irrelevant predictors.

    100 observations of 32 standard-normal predictors, the first 5 relevant
    with coefficient 1, gaussian noise at 50% explained variation. For
    ``knob`` k > 0: rows 5..14 get 5 random irrelevant predictors multiplied
    by (1+k) (good leverage), rows 0..4 get 2 random relevant predictors
    multiplied by (1+k) and their responses replaced by the contamination
    model (slope -1, 91% rule). knob=0 returns the clean base sample
    unchanged; affected entries scale linearly in the knob.
    """
    if knob < 0.0:
        raise InvalidParameterError(f"knob must be >= 0, got {knob!r}")
    n, p, s = 100, 32, 5
    cfg = ScenarioConfig("good-leverage", n, p, 2.0, knob > 0.0, seed, knob + 1.0)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    X = rng.standard_normal((n, p))
    sigma = np.sqrt(5.0)  # signal variance is exactly s = 5; 50% explained
    y = X[:, :s].sum(axis=1) + rng.standard_normal(n) * sigma

    if knob > 0.0:
        brows = np.arange(5)
        bpred = np.sort(rng.choice(np.arange(s), size=2, replace=False))
        grows = np.arange(5, 15)
        gpred = np.sort(rng.choice(np.arange(s, p), size=5, replace=False))
        factor = 1.0 + knob
        X[np.ix_(brows, bpred)] *= factor
        X[np.ix_(grows, gpred)] *= factor
        y[brows] = _contaminated_response(rng, X, brows, bpred, -1.0)
    else:
        brows = np.empty(0, dtype=int)
        bpred = np.empty(0, dtype=int)
        grows = np.empty(0, dtype=int)
        gpred = np.empty(0, dtype=int)

    beta = np.zeros(p)
    beta[:s] = 1.0
    true_scale = float(sigma / np.sqrt(2.0)) * _noise_tau(2.0)
    return GeneratedData(
        X=X, y=y, true_coef=beta, true_scale=true_scale,
        contaminated_rows=brows, contaminated_predictors=bpred,
        good_leverage_rows=grows, good_leverage_predictors=gpred, config=cfg,
    )


def generate(cfg):
    """Dispatch on ``cfg.variant``."""
    if cfg.variant == "one":
        return generate_scenario_one(
            cfg.n, cfg.p, cfg.nu, cfg.contaminated, cfg.seed, cfg.leverage,
            cfg.k_lev if cfg.k_lev is not None else 2.0,
        )
    if cfg.variant == "alternative":
        return generate_alternative_scenario(
            cfg.n, cfg.p, cfg.nu, cfg.contaminated, cfg.seed, cfg.leverage,
            cfg.k_lev if cfg.k_lev is not None else 256.0,
        )
    knob = cfg.leverage - 1.0 if cfg.contaminated else 0.0
    return generate_good_leverage_example(cfg.seed, knob=knob)
