"""Single-lambda tuning criteria used as comparison baselines.

Ties are always broken toward the larger lambda (the sparser model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._workers import ordered_map
from .errors import BadFolds, ConfigError
from .paths import (
    CoefficientPath,
    Dataset,
    LambdaGrid,
    PenaltyConfig,
    fit_path,
    make_lambda_grid,
    original_scale,
    standardize,
)

CRITERIA = ("AIC", "BIC", "EBIC", "GCV")
DEFAULT_EBIC_GAMMA = 1.0
DEFAULT_STAB_B = 100
DEFAULT_STAB_PI = 0.6


@dataclass(frozen=True)
class CriterionScore:
    lambda_index: int
    score: float
    df: int
    rss: float


def _argmin_prefer_large(scores: np.ndarray) -> int:
    # grid is ascending, so scanning from the top picks the largest lambda among ties
    rev = np.asarray(scores)[::-1]
    return len(rev) - 1 - int(np.argmin(rev))


def log_binom(p: int, k: int) -> float:
    return math.lgamma(p + 1) - math.lgamma(k + 1) - math.lgamma(p - k + 1)


def criterion_value(kind: str, n: int, p: int, rss: float, df: int, ebic_gamma: float = DEFAULT_EBIC_GAMMA) -> float:
    """Score one fit.  ``rss`` is floored at a tiny positive value so saturated fits stay finite."""
    kind = kind.upper()
    if kind == "GCV":
        if df >= n:
            return math.inf
        return rss / (n * (1.0 - df / n) ** 2)
    fit = n * math.log(max(rss, 1e-300) / n)
    if kind == "AIC":
        return fit + 2.0 * df
    bic = fit + math.log(n) * df
    if kind == "BIC":
        return bic
    if kind == "EBIC":
        return bic + 2.0 * ebic_gamma * log_binom(p, df)
    raise ConfigError(f"unknown criterion {kind!r}")


def information_criterion(
    path: CoefficientPath,
    data: Dataset,
    kind: str,
    ebic_gamma: float = DEFAULT_EBIC_GAMMA,
) -> tuple[list[CriterionScore], int]:
    """Score every path row; returns the scores and the minimizing grid index."""
    if path.penalty.kind == "ridge":
        raise ConfigError("information criteria need sparse fits; ridge paths are only used with SPSP")
    if kind.upper() not in CRITERIA:
        raise ConfigError(f"unknown criterion {kind!r}")
    resid = data.y[None, :] - path.coefs @ data.X.T
    rss = np.einsum("ki,ki->k", resid, resid)
    df = np.count_nonzero(path.coefs, axis=1)
    scores = [
        CriterionScore(k, criterion_value(kind, data.n, data.p, float(rss[k]), int(df[k]), ebic_gamma), int(df[k]), float(rss[k]))
        for k in range(path.K)
    ]
    chosen = _argmin_prefer_large(np.array([s.score for s in scores]))
    return scores, chosen


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold label per sample; labels are balanced and every sample gets exactly one."""
    if int(folds) != folds or not 2 <= folds <= n:
        raise BadFolds(f"folds must lie in [2, {n}], got {folds}")
    perm = np.random.default_rng(seed).permutation(n)
    labels = np.empty(n, dtype=int)
    labels[perm] = np.arange(n) % folds
    return labels


def _subset(data: Dataset, rows: np.ndarray) -> Dataset:
    X, y = data.raw()
    return standardize(X[rows], y[rows], names=data.names)


@dataclass(frozen=True)
class CVResult:
    chosen: int
    cv_error: np.ndarray
    fold_errors: np.ndarray  # folds x K
    folds: np.ndarray
    path: CoefficientPath

    @property
    def coef(self) -> np.ndarray:
        return self.path.coefs[self.chosen]


def cross_validate(
    data: Dataset,
    penalty: PenaltyConfig,
    folds: int = 10,
    seed: int = 0,
    grid: LambdaGrid | None = None,
    path: CoefficientPath | None = None,
) -> CVResult:
    """K-fold CV on a grid shared with the full-data fit (minimum rule)."""
    labels = fold_assignment(data.n, folds, seed)
    if grid is None:
        grid = path.grid if path is not None else make_lambda_grid(data, penalty=penalty)
    Xraw, yraw = data.raw()

    def one_fold(f):
        test = labels == f
        train = _subset(data, np.flatnonzero(~test))
        fp = fit_path(train, grid, penalty)
        slopes, icpt = original_scale(train, fp.coefs)
        pred = Xraw[test] @ slopes.T + icpt[None, :]
        return ((yraw[test][:, None] - pred) ** 2).mean(axis=0)

    fold_err = np.array(ordered_map(one_fold, range(folds)))
    cv = fold_err.mean(axis=0)
    chosen = _argmin_prefer_large(cv)
    if path is None:
        path = fit_path(data, grid, penalty)
    return CVResult(chosen=chosen, cv_error=cv, fold_errors=fold_err, folds=labels, path=path)


@dataclass(frozen=True)
class StabilityProfile:
    freq: np.ndarray  # K x p
    B: int
    threshold: float
    selected: tuple[int, ...]
    subsample_size: int
    lambdas: np.ndarray


def subsample_streams(seed: int, B: int) -> list[np.random.Generator]:
    """One independent generator per subsample; the first B of 2B streams equal the B streams."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(B)]


def stability_selection(
    data: Dataset,
    penalty: PenaltyConfig,
    B: int = DEFAULT_STAB_B,
    pi_threshold: float = DEFAULT_STAB_PI,
    seed: int = 0,
    grid: LambdaGrid | None = None,
) -> StabilityProfile:
    """Selection frequencies over ``B`` half-samples drawn without replacement."""
    if B < 2:
        raise ConfigError("stability selection needs B >= 2")
    if not 0.5 < pi_threshold <= 1.0:
        raise ConfigError("pi_threshold must lie in (0.5, 1]")
    if penalty.kind == "ridge":
        raise ConfigError("stability selection needs sparse fits")
    if grid is None:
        grid = make_lambda_grid(data, penalty=penalty)
    m = data.n // 2

    def one(rng):
        rows = np.sort(rng.choice(data.n, size=m, replace=False))
        return fit_path(_subset(data, rows), grid, penalty).coefs != 0

    hits = np.zeros((grid.K, data.p), dtype=np.int64)
    for mask in ordered_map(one, subsample_streams(seed, B)):
        hits += mask
    freq = hits / B
    selected = tuple(int(j) for j in np.flatnonzero(freq.max(axis=0) >= pi_threshold))
    return StabilityProfile(freq=freq, B=B, threshold=pi_threshold, selected=selected, subsample_size=m, lambdas=grid.values)
