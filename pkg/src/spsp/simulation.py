"""Synthetic designs, selection metrics and the replicate harness."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._workers import ordered_map
from .errors import ConfigError, NotPositiveDefinite, SingularGram, SPSPError, UnknownDesign, UnknownMethod
from .partition import DEFAULT_FALLBACK_R, refit, spsp_partition
from .paths import PenaltyConfig, fit_path, make_lambda_grid, original_scale, standardize
from .tuning import (
    DEFAULT_EBIC_GAMMA,
    DEFAULT_STAB_B,
    DEFAULT_STAB_PI,
    cross_validate,
    information_criterion,
    stability_selection,
)

log = logging.getLogger(__name__)

DESIGNS = ("M1", "M2", "M3", "M4", "MOTIVATING")
METHODS = ("spsp", "cv", "gcv", "aic", "bic", "ebic", "stability", "oracle")
BOOTSTRAP_RESAMPLES = 500


@dataclass(frozen=True)
class DesignSpec:
    name: str
    n: int
    p: int
    beta_star: np.ndarray
    sigma: float
    covariance: str  # "ar1", "block", "identity" or "custom"
    rho: float = 0.0
    blocks: tuple[tuple[int, ...], ...] = ()
    custom: np.ndarray | None = None
    misspecified: bool = False

    def __post_init__(self):
        if len(self.beta_star) != self.p:
            raise ConfigError(f"beta_star has length {len(self.beta_star)}, expected p={self.p}")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.n < 2 or self.p < 1:
            raise ConfigError("need n >= 2 and p >= 1")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.beta_star))

    def covariance_matrix(self) -> np.ndarray:
        p = self.p
        if self.covariance == "identity":
            return np.eye(p)
        if self.covariance == "ar1":
            idx = np.arange(p)
            return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
        if self.covariance == "block":
            S = np.eye(p)
            for blk in self.blocks:
                b = np.asarray(blk)
                S[np.ix_(b, b)] = self.rho
                S[b, b] = 1.0
            return S
        if self.covariance == "custom":
            return np.array(self.custom, dtype=float)
        raise ConfigError(f"unknown covariance structure {self.covariance!r}")


def _beta(p: int, head) -> np.ndarray:
    b = np.zeros(p)
    b[: len(head)] = head
    return b


def build_design(name: str, **overrides) -> DesignSpec:
    """One of the benchmark designs, optionally with fields overridden.

    Overriding ``p`` pads or truncates ``beta_star`` with zeros unless
    ``beta_star`` is overridden too.
    """
    key = name.upper()
    if key not in DESIGNS:
        raise UnknownDesign(f"unknown design {name!r}; expected one of {DESIGNS}")
    p = int(overrides.get("p", {"M2": 1000, "MOTIVATING": 40}.get(key, 100)))
    if key in ("M1", "M2"):
        base = dict(n=50, sigma=3.0, covariance="ar1", rho=0.5, beta_star=_beta(p, [3.0, 1.5, 0.0, 0.0, 2.0]))
    elif key == "M3":
        base = dict(
            n=50,
            sigma=3.0,
            covariance="block",
            rho=0.9,
            blocks=((0, 1, 2), (3, 4, 5)),
            beta_star=_beta(p, [3.0, 3.0, -2.0, 3.0, 3.0, -2.0]),
        )
    elif key == "M4":
        base = dict(
            n=50,
            sigma=1.0,
            covariance="identity",
            beta_star=_beta(p, [1.0, -1.25, 0.75, -0.95, 1.5]),
            misspecified=True,
        )
    else:
        base = dict(
            n=50,
            sigma=3.0,
            covariance="block",
            rho=0.9,
            blocks=(tuple(range(10)),),
            beta_star=_beta(p, [3.0] * 5 + [-2.0] * 5),
        )
    base.update({k: v for k, v in overrides.items() if k != "p"})
    base["beta_star"] = np.asarray(base["beta_star"], dtype=float)
    return DesignSpec(name=key, p=p, **base)


@dataclass(frozen=True)
class SyntheticDataset:
    X: np.ndarray
    y: np.ndarray
    spec: DesignSpec
    seed: int


def covariance_factor(spec: DesignSpec) -> np.ndarray:
    try:
        return np.linalg.cholesky(spec.covariance_matrix())
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance of design {spec.name} is not positive definite") from exc


def sample_dataset(spec: DesignSpec, seed: int, factor: np.ndarray | None = None) -> SyntheticDataset:
    """Draw ``X ~ N(0, Sigma)`` row-wise and ``y = X beta + eps`` (plus ``x1*x2`` if misspecified)."""
    L = covariance_factor(spec) if factor is None else factor
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((spec.n, spec.p)) @ L.T
    y = X @ spec.beta_star + spec.sigma * rng.standard_normal(spec.n)
    if spec.misspecified:
        y = y + X[:, 0] * X[:, 1]
    return SyntheticDataset(X=X, y=y, spec=spec, seed=int(seed))


@dataclass(frozen=True)
class SelectionMetrics:
    fp: int
    fn: int
    model_error: float
    method: str = ""
    penalty: str = ""


def compute_metrics(selected, refit_beta, dataset: SyntheticDataset, method: str = "", penalty: str = "") -> SelectionMetrics:
    """False positives/negatives and model error with the replicate's sample covariance."""
    spec = dataset.spec
    sel = set(int(j) for j in selected)
    truth = set(spec.support)
    d = np.asarray(refit_beta, dtype=float) - spec.beta_star
    Xc = dataset.X - dataset.X.mean(axis=0)
    proj = Xc @ d
    me = float(proj @ proj) / (spec.n - 1) / spec.sigma**2
    return SelectionMetrics(fp=len(sel - truth), fn=len(truth - sel), model_error=me, method=method, penalty=penalty)


@dataclass(frozen=True)
class ExperimentOptions:
    K: int = 100
    min_ratio: float | None = None
    folds: int = 10
    stab_B: int = DEFAULT_STAB_B
    stab_pi: float = DEFAULT_STAB_PI
    ebic_gamma: float = DEFAULT_EBIC_GAMMA
    R_override: float | None = None
    fallback_R: float = DEFAULT_FALLBACK_R


def derived_seed(seed: int, salt: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(salt)]).generate_state(1)[0])


_SALT_CV = 1
_SALT_STAB = 2
_SALT_BOOT = 3


@dataclass(frozen=True)
class ReplicateRecord:
    replicate: int
    seed: int
    penalty: str
    method: str
    fp: int
    fn: int
    me: float
    n_selected: int
    R_used: float = math.nan


def _baseline_allowed(penalty: str, method: str) -> bool:
    return penalty != "ridge" or method in ("spsp", "oracle")


def evaluate_replicate(
    spec: DesignSpec,
    seed: int,
    penalties,
    methods,
    options: ExperimentOptions = ExperimentOptions(),
    factor: np.ndarray | None = None,
    replicate: int = 0,
) -> tuple[list[ReplicateRecord], list[tuple[str, str, str]]]:
    """All (penalty, method) pairs on one dataset; returns records and failures."""
    ds = sample_dataset(spec, seed, factor)
    data = standardize(ds.X, ds.y)
    records, failures = [], []
    for pen_name in penalties:
        pen = PenaltyConfig(kind=pen_name)
        try:
            grid = make_lambda_grid(data, options.K, options.min_ratio, pen)
            path = fit_path(data, grid, pen)
        except SPSPError as exc:
            failures.extend((pen_name, m, str(exc)) for m in methods if _baseline_allowed(pen_name, m))
            continue
        for method in methods:
            if not _baseline_allowed(pen_name, method):
                continue
            R_used = math.nan
            try:
                if method == "spsp":
                    part = spsp_partition(path, options.R_override, options.fallback_R)
                    selected = part.selected
                    beta = refit(data, selected).coef
                    R_used = part.R_used
                elif method == "oracle":
                    selected = spec.support
                    beta = refit(data, selected).coef
                elif method in ("aic", "bic", "ebic", "gcv"):
                    _, k = information_criterion(path, data, method.upper(), options.ebic_gamma)
                    selected = tuple(int(j) for j in np.flatnonzero(path.coefs[k]))
                    beta = original_scale(data, path.coefs[k])[0]
                elif method == "cv":
                    cv = cross_validate(data, pen, options.folds, derived_seed(seed, _SALT_CV), grid=grid, path=path)
                    selected = tuple(int(j) for j in np.flatnonzero(cv.coef))
                    beta = original_scale(data, cv.coef)[0]
                elif method == "stability":
                    prof = stability_selection(
                        data, pen, options.stab_B, options.stab_pi, derived_seed(seed, _SALT_STAB), grid=grid
                    )
                    selected = prof.selected
                    beta = refit(data, selected).coef
                else:
                    raise UnknownMethod(f"unknown method {method!r}; expected one of {METHODS}")
            except UnknownMethod:
                raise
            except SPSPError as exc:
                failures.append((pen_name, method, str(exc)))
                continue
            m = compute_metrics(selected, beta, ds, method, pen_name)
            records.append(
                ReplicateRecord(replicate, int(seed), pen_name, method, m.fp, m.fn, m.model_error, len(selected), R_used)
            )
    return records, failures


@dataclass(frozen=True)
class CellSummary:
    penalty: str
    method: str
    reps: int
    fp_mean: float
    fp_se: float
    fn_mean: float
    fn_se: float
    me_median: float
    me_se: float


@dataclass(frozen=True)
class ExperimentSummary:
    design: str
    cells: tuple[CellSummary, ...]
    records: tuple[ReplicateRecord, ...]
    seeds: tuple[int, ...]
    failures: tuple[tuple[int, str, str, str], ...] = field(default=())

    def cell(self, penalty: str, method: str) -> CellSummary:
        for c in self.cells:
            if c.penalty == penalty and c.method == method:
                return c
        raise KeyError((penalty, method))


def _se_mean(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


def bootstrap_median_se(x: np.ndarray, seed: int, resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return math.nan
    rng = np.random.default_rng(seed)
    meds = np.median(x[rng.integers(0, len(x), size=(resamples, len(x)))], axis=1)
    return float(meds.std(ddof=1))


def summarize(design: str, records, seeds, failures=(), boot_seed: int = 0) -> ExperimentSummary:
    cells = []
    keys = []
    for r in records:
        if (r.penalty, r.method) not in keys:
            keys.append((r.penalty, r.method))
    for pen, meth in keys:
        rs = [r for r in records if r.penalty == pen and r.method == meth]
        fp = np.array([r.fp for r in rs], dtype=float)
        fn = np.array([r.fn for r in rs], dtype=float)
        me = np.array([r.me for r in rs], dtype=float)
        cells.append(
            CellSummary(
                penalty=pen,
                method=meth,
                reps=len(rs),
                fp_mean=float(fp.mean()),
                fp_se=_se_mean(fp),
                fn_mean=float(fn.mean()),
                fn_se=_se_mean(fn),
                me_median=float(np.median(me)),
                me_se=bootstrap_median_se(me, boot_seed),
            )
        )
    return ExperimentSummary(design=design, cells=tuple(cells), records=tuple(records), seeds=tuple(seeds), failures=tuple(failures))


def run_experiment(
    spec: DesignSpec,
    penalties=("lasso",),
    methods=("spsp",),
    replicates: int = 100,
    base_seed: int = 0,
    options: ExperimentOptions = ExperimentOptions(),
) -> ExperimentSummary:
    """Replicate ``r`` uses seed ``base_seed + r``; every pair sees the same datasets."""
    if replicates < 2:
        raise ConfigError("need at least 2 replicates")
    for m in methods:
        if m not in METHODS:
            raise UnknownMethod(f"unknown method {m!r}; expected one of {METHODS}")
    factor = covariance_factor(spec)
    seeds = [base_seed + r for r in range(replicates)]

    def one(r):
        return evaluate_replicate(spec, seeds[r], penalties, methods, options, factor, replicate=r)

    records, failures = [], []
    for r, (recs, fails) in enumerate(ordered_map(one, range(replicates))):
        records.extend(recs)
        failures.extend((r, *f) for f in fails)
    if failures:
        log.warning("%d (replicate, penalty, method) evaluations failed and were excluded", len(failures))
    return summarize(spec.name, records, seeds, failures, boot_seed=derived_seed(base_seed, _SALT_BOOT))


@dataclass(frozen=True)
class SweepRow:
    R: float
    mean_fpr: float
    mean_fnr: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    mean_estimated_R: float
    estimated_fpr: float
    estimated_fnr: float
    seeds: tuple[int, ...]


def default_R_grid() -> np.ndarray:
    return np.round(np.arange(2, 21) * 0.5, 10)


def run_r_sweep(
    spec: DesignSpec,
    R_values=None,
    replicates: int = 100,
    base_seed: int = 0,
    penalty: str = "lasso",
    options: ExperimentOptions = ExperimentOptions(),
) -> SweepResult:
    """Mean false-positive/negative rates of SPSP for each fixed R.

    The rates at the data-estimated R are reported alongside for reference.
    FNR is NaN when the design has no true signal.
    """
    R_values = default_R_grid() if R_values is None else np.asarray(R_values, dtype=float)
    factor = covariance_factor(spec)
    truth = set(spec.support)
    s = len(truth)
    n_zero = spec.p - s
    pen = PenaltyConfig(kind=penalty)
    seeds = [base_seed + r for r in range(replicates)]

    def rates(selected):
        sel = set(selected)
        fpr = len(sel - truth) / n_zero if n_zero else math.nan
        fnr = len(truth - sel) / s if s else math.nan
        return fpr, fnr

    def one(seed):
        ds = sample_dataset(spec, seed, factor)
        data = standardize(ds.X, ds.y)
        path = fit_path(data, make_lambda_grid(data, options.K, options.min_ratio, pen), pen)
        base = spsp_partition(path, None, options.fallback_R)
        fixed = [rates(spsp_partition(path, float(R), options.fallback_R).selected) for R in R_values]
        return base.R_used, rates(base.selected), fixed

    out = ordered_map(one, seeds)
    est_R = np.array([o[0] for o in out])
    est_rates = np.array([o[1] for o in out])
    fixed = np.array([o[2] for o in out])  # reps x len(R) x 2
    rows = tuple(
        SweepRow(float(R), float(np.mean(fixed[:, i, 0])), float(np.mean(fixed[:, i, 1])))
        for i, R in enumerate(R_values)
    )
    return SweepResult(
        rows=rows,
        mean_estimated_R=float(est_R.mean()),
        estimated_fpr=float(est_rates[:, 0].mean()),
        estimated_fnr=float(est_rates[:, 1].mean()),
        seeds=tuple(seeds),
    )


def irrepresentable_stat(X, S) -> float:
    """Infinity norm of ``(X_Sc' X_S / n) (X_S' X_S / n)^-1``; 0 when ``S`` covers every column."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    S = sorted(set(int(j) for j in S))
    Sc = [j for j in range(p) if j not in set(S)]
    if not Sc or not S:
        return 0.0
    XS, XSc = X[:, S], X[:, Sc]
    G = XS.T @ XS / n
    try:
        if np.linalg.cond(G) > 1e12:
            raise np.linalg.LinAlgError
        M = np.linalg.solve(G, (XSc.T @ XS / n).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularGram("X_S' X_S is singular") from exc
    return float(np.abs(M).sum(axis=1).max())


def marginal_correlations(X, y) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((Xc**2).sum(axis=0) * (yc @ yc))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (Xc.T @ yc) / denom
    return np.where(np.isfinite(r), r, 0.0)


def sis_ranking(X, y) -> np.ndarray:
    """Column indices by decreasing ``|corr(x_j, y)|``; ties go to the lower index."""
    a = np.abs(marginal_correlations(X, y))
    return np.argsort(-a, kind="stable")


def sis_screen(X, y, d: int) -> tuple[int, ...]:
    p = np.asarray(X).shape[1]
    if int(d) != d or not 1 <= d <= p:
        raise ConfigError(f"d must lie in [1, {p}], got {d}")
    return tuple(sorted(int(j) for j in sis_ranking(X, y)[:d]))

