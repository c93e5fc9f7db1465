"""Penalized least-squares solution paths.

Every solver minimizes

    (1/n) ||y - X b||^2 + lambda * sum_j J(|b_j|)

on standardized data over a log-equidistant grid of lambda values.  Convex
and non-convex penalties share one coordinate-descent kernel; ridge uses its
closed form through a thin SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import BadGrid, ConfigError, ConstantColumn, NoConvergence, NonFinite, SingularSystem

PENALTIES = ("lasso", "elastic_net", "adaptive_lasso", "scad", "mcp", "ridge")

_KIND_L1 = 0
_KIND_SCAD = 1
_KIND_MCP = 2

ADAPTIVE_RIDGE_LAMBDA = 1e-3
ADAPTIVE_WEIGHT_CAP = 1e8
# ridge shares the lasso grid endpoints
RIDGE_GRID_FACTOR = 1.0


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Standardized design and centered response.

    ``column_scales`` are population standard deviations, so every column of
    ``X`` satisfies ``x_j' x_j / n == 1``.
    """

    X: np.ndarray
    y: np.ndarray
    column_means: np.ndarray
    column_scales: np.ndarray
    y_mean: float
    standardized: bool = True
    names: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def raw(self) -> tuple[np.ndarray, np.ndarray]:
        """Undo the standardization."""
        return unstandardize(self)


def standardize(raw_X, raw_y, names=None) -> Dataset:
    X = np.array(raw_X, dtype=float, copy=True)
    y = np.array(raw_y, dtype=float, copy=True).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    if not np.all(np.isfinite(X)):
        raise NonFinite("X")
    if not np.all(np.isfinite(y)):
        raise NonFinite("y")
    means = X.mean(axis=0)
    X -= means
    scales = np.sqrt((X**2).mean(axis=0))
    for j in range(p):
        if not scales[j] > 1e-12:
            raise ConstantColumn(j, None if names is None else names[j])
    X /= scales
    y_mean = float(y.mean())
    y -= y_mean
    return Dataset(
        X=_freeze(X),
        y=_freeze(y),
        column_means=_freeze(means),
        column_scales=_freeze(scales),
        y_mean=y_mean,
        names=None if names is None else tuple(names),
    )


def unstandardize(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    X = data.X * data.column_scales + data.column_means
    y = data.y + data.y_mean
    return X, y


@dataclass(frozen=True)
class PenaltyConfig:
    kind: str = "lasso"
    alpha: float = 1.0
    scad_a: float = 3.7
    mcp_gamma: float = 3.0
    adaptive_power: float = 1.0
    tol: float = 1e-10
    max_iter: int = 1_000_000

    def __post_init__(self):
        if self.kind not in PENALTIES:
            raise ConfigError(f"unknown penalty {self.kind!r}; expected one of {PENALTIES}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not self.scad_a > 2.0:
            raise ConfigError("scad_a must exceed 2")
        if not self.mcp_gamma > 1.0:
            raise ConfigError("mcp_gamma must exceed 1")
        if not self.adaptive_power > 0.0:
            raise ConfigError("adaptive_power must be positive")
        if not self.tol > 0.0:
            raise ConfigError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ConfigError("max_iter must be at least 1")

    @property
    def l1_alpha(self) -> float:
        # lasso-type penalties other than elastic net use the pure l1 part
        return self.alpha if self.kind == "elastic_net" else 1.0

    @property
    def is_convex(self) -> bool:
        return self.kind in ("lasso", "elastic_net", "adaptive_lasso", "ridge")


@dataclass(frozen=True)
class LambdaGrid:
    values: np.ndarray
    min_ratio: float

    @property
    def K(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CoefficientPath:
    """Row ``k`` of ``coefs`` is the standardized-scale estimate at ``grid.values[k]``.

    ``intercepts`` are on the original scale of the data the path was fitted on.
    """

    grid: LambdaGrid
    coefs: np.ndarray
    penalty: PenaltyConfig
    intercepts: np.ndarray
    n_sweeps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def K(self) -> int:
        return self.coefs.shape[0]

    @property
    def p(self) -> int:
        return self.coefs.shape[1]


def soft_threshold(z: float, t: float) -> float:
    """``sign(z) * max(|z| - t, 0)``.

    >>> soft_threshold(3.0, 1.0)
    2.0
    >>> soft_threshold(-0.5, 1.0)
    0.0
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return _soft(float(z), float(t))


@njit(cache=True, nogil=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True, nogil=True)
def _coord_update(z, v, lam, kind, l1, l2, shape):
    # Minimizes (v/2) b^2 - z b + pen(b) for one coordinate.  For l1-type
    # penalties pen = (lam*l1/2)|b| + (lam*l2/2) b^2; for SCAD/MCP pen is the
    # standard penalty at level lam/2 with shape parameter `shape`.
    if kind == 0:
        return _soft(z, 0.5 * lam * l1) / (v + lam * l2)
    t = 0.5 * lam
    az = abs(z)
    if kind == 1:
        if az <= (v + 1.0) * t:
            return _soft(z, t) / v
        if az <= v * shape * t:
            return _soft(z, shape * t / (shape - 1.0)) / (v - 1.0 / (shape - 1.0))
        return z / v
    if az <= v * shape * t:
        return _soft(z, t) / (v - 1.0 / shape)
    return z / v


@njit(cache=True, nogil=True)
def _sweep(Xt, r, beta, xtx, lam, kind, alpha, weights, shape, active_only):
    p, n = Xt.shape
    dmax = 0.0
    l2 = 1.0 - alpha
    for j in range(p):
        if active_only and beta[j] == 0.0:
            continue
        bj = beta[j]
        xj = Xt[j]
        acc = 0.0
        for i in range(n):
            acc += xj[i] * r[i]
        z = acc / n + xtx[j] * bj
        new = _coord_update(z, xtx[j], lam, kind, alpha * weights[j], l2, shape)
        d = new - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= xj[i] * d
            beta[j] = new
            ad = abs(d)
            if ad > dmax:
                dmax = ad
    return dmax


@njit(cache=True, nogil=True)
def _cd_path(Xt, y, xtx, lambdas, kind, alpha, weights, shape, tol, max_iter, warm):
    """Fit lambdas in the given order, warm-starting each from the previous."""
    p, n = Xt.shape
    K = lambdas.shape[0]
    out = np.zeros((K, p))
    sweeps_used = np.zeros(K, dtype=np.int64)
    beta = np.zeros(p)
    r = y.copy()
    for k in range(K):
        if not warm:
            beta[:] = 0.0
            r[:] = y
        lam = lambdas[k]
        sweeps = 0
        while True:
            dmax = _sweep(Xt, r, beta, xtx, lam, kind, alpha, weights, shape, False)
            sweeps += 1
            if dmax < tol:
                break
            if sweeps >= max_iter:
                sweeps_used[k] = sweeps
                return out, sweeps_used, k
            while True:
                dmax = _sweep(Xt, r, beta, xtx, lam, kind, alpha, weights, shape, True)
                sweeps += 1
                if dmax < tol:
                    break
                if sweeps >= max_iter:
                    sweeps_used[k] = sweeps
                    return out, sweeps_used, k
        out[k] = beta
        sweeps_used[k] = sweeps
    return out, sweeps_used, -1


def adaptive_weights(data: Dataset, power: float = 1.0) -> np.ndarray:
    """Adaptive-lasso weights ``1/|b_init|^power`` capped at ``ADAPTIVE_WEIGHT_CAP``.

    The initial estimate is OLS when ``p < n`` and ridge with a small penalty
    otherwise.
    """
    X, y = data.X, data.y
    n, p = X.shape
    if p < n:
        init = np.linalg.lstsq(X, y, rcond=None)[0]
    else:
        init = ridge_coefs(X, y, np.array([ADAPTIVE_RIDGE_LAMBDA]))[0]
    with np.errstate(divide="ignore"):
        w = np.abs(init) ** (-power)
    return np.minimum(w, ADAPTIVE_WEIGHT_CAP)


def _l1_weights(data: Dataset, penalty: PenaltyConfig) -> np.ndarray:
    if penalty.kind == "adaptive_lasso":
        return adaptive_weights(data, penalty.adaptive_power)
    return np.ones(data.p)


def lambda_max(data: Dataset, penalty: PenaltyConfig, weights: np.ndarray | None = None) -> float:
    """Smallest lambda whose solution is identically zero (ridge: ``RIDGE_GRID_FACTOR`` x the lasso value)."""
    grad0 = 2.0 * np.abs(data.X.T @ data.y) / data.n
    if penalty.kind == "ridge":
        return RIDGE_GRID_FACTOR * float(grad0.max())
    if weights is None:
        weights = _l1_weights(data, penalty)
    return float(np.max(grad0 / (penalty.l1_alpha * weights)))


def default_min_ratio(n: int, p: int) -> float:
    return 0.01 if n < p else 1e-4


def make_lambda_grid(
    data: Dataset,
    K: int = 100,
    min_ratio: float | None = None,
    penalty: PenaltyConfig | None = None,
) -> LambdaGrid:
    if penalty is None:
        penalty = PenaltyConfig()
    if min_ratio is None:
        min_ratio = default_min_ratio(data.n, data.p)
    if int(K) != K or K < 2:
        raise BadGrid(f"need K >= 2, got {K}")
    if not 0.0 < min_ratio < 1.0:
        raise BadGrid(f"min_ratio must lie in (0, 1), got {min_ratio}")
    lmax = lambda_max(data, penalty)
    if not lmax > 0.0 or not math.isfinite(lmax):
        raise BadGrid("response is orthogonal to every covariate; lambda_max is zero")
    return grid_from_endpoints(lmax, int(K), min_ratio)


def grid_from_endpoints(lmax: float, K: int, min_ratio: float) -> LambdaGrid:
    values = lmax * np.exp(np.linspace(math.log(min_ratio), 0.0, K))
    values[-1] = lmax
    return LambdaGrid(values=_freeze(values), min_ratio=float(min_ratio))


def ridge_coefs(X: np.ndarray, y: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """Rows solve ``(X'X/n + lam I) b = X'y/n`` for each ``lam``."""
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise SingularSystem("ridge requires lambda > 0")
    n = X.shape[0]
    U, d, Vt = np.linalg.svd(X, full_matrices=False)
    uty = U.T @ y
    shrink = d[None, :] / (d[None, :] ** 2 + n * lambdas[:, None])
    return (shrink * uty[None, :]) @ Vt


def original_scale(data: Dataset, coefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map standardized-scale coefficients (1-D or K x p) to raw-scale slopes and intercepts."""
    coefs = np.asarray(coefs, dtype=float)
    slopes = coefs / data.column_scales
    intercepts = data.y_mean - slopes @ data.column_means
    return slopes, intercepts


def fit_path(
    data: Dataset,
    grid: LambdaGrid,
    penalty: PenaltyConfig | None = None,
    warm_start: bool = True,
) -> CoefficientPath:
    """Fit the penalized path on ``grid``.

    Solvers run from the largest lambda down with warm starts; the returned
    rows follow the ascending grid.  Set ``warm_start=False`` to fit each
    lambda from zero (used to cross-check convex fits).
    """
    if penalty is None:
        penalty = PenaltyConfig()
    lams = np.asarray(grid.values, dtype=float)
    if penalty.kind == "ridge":
        coefs = ridge_coefs(data.X, data.y, lams)
        sweeps = np.zeros(len(lams), dtype=np.int64)
    else:
        weights = _l1_weights(data, penalty)
        if penalty.kind == "scad":
            kind, shape = _KIND_SCAD, penalty.scad_a
        elif penalty.kind == "mcp":
            kind, shape = _KIND_MCP, penalty.mcp_gamma
        else:
            kind, shape = _KIND_L1, 0.0
        Xt = np.ascontiguousarray(data.X.T)
        xtx = np.einsum("ij,ij->i", Xt, Xt) / data.n
        desc = np.ascontiguousarray(lams[::-1])
        out, sweeps, failed = _cd_path(
            Xt,
            np.ascontiguousarray(data.y),
            xtx,
            desc,
            kind,
            penalty.l1_alpha,
            weights,
            shape,
            penalty.tol,
            int(penalty.max_iter),
            warm_start,
        )
        if failed >= 0:
            raise NoConvergence(float(desc[failed]), int(sweeps[failed]))
        coefs = out[::-1].copy()
        sweeps = sweeps[::-1].copy()
        # zero is the exact solution from lambda_max up; rounding in the
        # updates can leave a coefficient of order 1e-17 right at the boundary
        coefs[lams >= lambda_max(data, penalty, weights)] = 0.0
    _, intercepts = original_scale(data, coefs)
    return CoefficientPath(
        grid=grid,
        coefs=_freeze(np.ascontiguousarray(coefs)),
        penalty=penalty,
        intercepts=_freeze(intercepts),
        n_sweeps=_freeze(sweeps),
    )


def penalty_value(beta: np.ndarray, lam: float, penalty: PenaltyConfig, weights: np.ndarray | None = None) -> float:
    """``lambda * sum_j J(|b_j|)`` under the package's scaling conventions."""
    b = np.abs(np.asarray(beta, dtype=float))
    if penalty.kind == "ridge":
        return lam * float(b @ b)
    if penalty.kind in ("lasso", "elastic_net", "adaptive_lasso"):
        w = np.ones_like(b) if weights is None else weights
        a = penalty.l1_alpha
        return lam * float(a * (w @ b) + (1.0 - a) * (b @ b))
    t = 0.5 * lam
    if penalty.kind == "mcp":
        g = penalty.mcp_gamma
        vals = np.where(b <= g * t, t * b - b**2 / (2 * g), 0.5 * g * t**2)
    else:
        a = penalty.scad_a
        vals = np.where(
            b <= t,
            t * b,
            np.where(b <= a * t, (2 * a * t * b - b**2 - t**2) / (2 * (a - 1)), 0.5 * (a + 1) * t**2),
        )
    return 2.0 * float(vals.sum())


def objective(data: Dataset, beta: np.ndarray, lam: float, penalty: PenaltyConfig, weights=None) -> float:
    r = data.y - data.X @ beta
    return float(r @ r) / data.n + penalty_value(beta, lam, penalty, weights)


def kkt_residuals(data: Dataset, path: CoefficientPath) -> np.ndarray:
    """Max stationarity violation per path row.

    Convex l1-type penalties use the subgradient condition; SCAD/MCP use the
    penalty derivative (a local-minimum check); ridge uses the gradient.
    """
    pen = path.penalty
    X, y, n = data.X, data.y, data.n
    weights = _l1_weights(data, pen) if pen.kind not in ("ridge",) else None
    res = np.empty(path.K)
    for k in range(path.K):
        lam = float(path.grid.values[k])
        b = path.coefs[k]
        g = 2.0 * X.T @ (y - X @ b) / n
        if pen.kind == "ridge":
            res[k] = np.max(np.abs(g - 2.0 * lam * b))
            continue
        if pen.kind in ("lasso", "elastic_net", "adaptive_lasso"):
            a = pen.l1_alpha
            g = g - 2.0 * lam * (1.0 - a) * b
            thr = lam * a * weights
            nz = b != 0
            viol = np.where(nz, np.abs(g - thr * np.sign(b)), np.maximum(np.abs(g) - thr, 0.0))
        else:
            t = 0.5 * lam
            ab = np.abs(b)
            if pen.kind == "mcp":
                deriv = np.maximum(t - ab / pen.mcp_gamma, 0.0)
            else:
                a = pen.scad_a
                deriv = np.where(ab <= t, t, np.maximum(a * t - ab, 0.0) / (a - 1))
            nz = b != 0
            viol = np.where(nz, np.abs(g - 2.0 * deriv * np.sign(b)), np.maximum(np.abs(g) - lam, 0.0))
        res[k] = float(np.max(viol))
    return res
