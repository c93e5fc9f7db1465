"""Selection by partitioning a solution path into zero and non-zero regions.

At each lambda the absolute estimates are sorted and split at a boundary
``T_k``.  The boundary is inherited from the previous lambda and moved down
when a sufficiently dominant gap appears among the estimates currently
treated as irrelevant.  The final selection is the union of the per-lambda
relevant sets.

Indices are 0-based column positions throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPath, SingularSystem
from .paths import CoefficientPath, Dataset, original_scale

DEFAULT_FALLBACK_R = 5.0
REFIT_RIDGE_LAMBDA = 1e-3
_REFIT_COND_LIMIT = 1e12


def adjacent_distances(b) -> tuple[np.ndarray, np.ndarray]:
    """Stable ascending order of ``b`` and the gaps between consecutive order statistics.

    A zero is prepended before differencing, so ``D[0]`` is the smallest value
    itself and ``D.sum() == b.max()``.

    >>> adjacent_distances([0.3, 0.3, 1.0])[1].round(12).tolist()
    [0.3, 0.0, 0.7]
    """
    b = np.asarray(b, dtype=float)
    order = np.argsort(b, kind="stable")
    D = np.diff(b[order], prepend=0.0)
    return order, D


def _top_gap(D: np.ndarray) -> tuple[int, float, float]:
    """Location (last among ties), size, and runner-up below it of the largest gap in ``D``."""
    jt = len(D) - 1 - int(np.argmax(D[::-1]))
    dmax = float(D[jt])
    dmax2 = float(D[:jt].max()) if jt > 0 else 0.0
    return jt, dmax, dmax2


def estimate_R(b_at_lambda1, fallback_R: float = DEFAULT_FALLBACK_R) -> float:
    """Ratio of the largest adjacent distance to the largest one beneath it.

    Degenerate rows (no gap at all, or nothing below the largest gap) return
    ``fallback_R``.
    """
    _, D = adjacent_distances(b_at_lambda1)
    if len(D) == 0:
        return float(fallback_R)
    _, dmax, dmax2 = _top_gap(D)
    if dmax == 0.0 or dmax2 == 0.0:
        return float(fallback_R)
    return dmax / dmax2


@dataclass(frozen=True)
class PartitionState:
    T: float
    relevant: np.ndarray  # boolean mask over variables
    k: int = 0

    @property
    def S_hat(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.relevant))

    @property
    def S_hat_c(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(~self.relevant))


def initial_state(p: int) -> PartitionState:
    return PartitionState(T=math.inf, relevant=np.zeros(p, dtype=bool), k=0)


def partition_step(prev: PartitionState, b_k, R: float) -> PartitionState:
    """Advance the boundary one lambda.

    The boundary starts at the largest current estimate among last step's
    irrelevant variables.  It is then lowered, once, to the largest gap among
    the irrelevant estimates if that gap is at least as large (up to ``R``)
    as the current separating gap and more than ``R`` times every gap below it.
    """
    b = np.asarray(b_k, dtype=float)
    p = b.shape[0]
    irrelevant_prev = ~prev.relevant
    # an empty irrelevant set inherits the prepended zero order statistic
    T = float(b[irrelevant_prev].max()) if irrelevant_prev.any() else 0.0
    relevant = b > T
    s = int(relevant.sum())
    m = p - s

    order, D = adjacent_distances(b)
    gap = float(D[m]) if s >= 1 else 0.0
    if m >= 1:
        jt, dmax, dmax2 = _top_gap(D[:m])
        if gap <= R * dmax and dmax > R * dmax2:
            T = float(b[order[jt - 1]]) if jt >= 1 else 0.0
            relevant = b > T
    return PartitionState(T=T, relevant=relevant, k=prev.k + 1)


@dataclass(frozen=True)
class RefitResult:
    coef: np.ndarray  # original-scale slopes, zero off the selected set
    intercept: float
    used_ridge: bool
    singular: bool


@dataclass(frozen=True)
class PartitionResult:
    lambdas: np.ndarray
    boundary: np.ndarray
    relevant_sets: tuple[tuple[int, ...], ...]
    selected: tuple[int, ...]
    R_used: float
    R_estimated: float
    refit: RefitResult | None = None

    @property
    def refit_coefs(self) -> np.ndarray | None:
        return None if self.refit is None else self.refit.coef


def spsp_partition(
    path,
    R_override: float | None = None,
    fallback_R: float = DEFAULT_FALLBACK_R,
    lambdas=None,
) -> PartitionResult:
    """Partition a solution path and select the union of per-lambda relevant sets.

    ``path`` is a :class:`CoefficientPath` or any ``K x p`` array whose rows
    are ordered by ascending lambda.
    """
    if isinstance(path, CoefficientPath):
        coefs = path.coefs
        if lambdas is None:
            lambdas = path.grid.values
    else:
        coefs = np.asarray(path, dtype=float)
    if coefs.ndim != 2 or coefs.shape[0] < 2:
        raise EmptyPath("need a K x p path with K >= 2")
    if fallback_R <= 0 or (R_override is not None and R_override <= 0):
        raise ValueError("R must be positive")
    K, p = coefs.shape
    if lambdas is None:
        lambdas = np.arange(1, K + 1, dtype=float)
    babs = np.abs(coefs)

    R_est = estimate_R(babs[0], fallback_R)
    R = float(R_override) if R_override is not None else R_est

    state = initial_state(p)
    boundary = np.empty(K)
    boundary[0] = state.T
    sets = [state.S_hat]
    union = state.relevant.copy()
    for k in range(1, K):
        state = partition_step(state, babs[k], R)
        boundary[k] = state.T
        sets.append(state.S_hat)
        union |= state.relevant
    boundary.setflags(write=False)
    return PartitionResult(
        lambdas=np.asarray(lambdas, dtype=float),
        boundary=boundary,
        relevant_sets=tuple(sets),
        selected=tuple(int(j) for j in np.flatnonzero(union)),
        R_used=R,
        R_estimated=R_est,
    )


def refit(data: Dataset, selected, lam_refit: float = REFIT_RIDGE_LAMBDA) -> RefitResult:
    """Unpenalized least squares on the selected columns, reported on the raw scale.

    Falls back to ridge with ``lam_refit`` when the selection has at least
    ``n`` columns or the normal equations are numerically singular.
    """
    idx = np.asarray(sorted(set(int(j) for j in selected)), dtype=int)
    beta = np.zeros(data.p)
    if idx.size == 0:
        return RefitResult(coef=beta, intercept=data.y_mean, used_ridge=False, singular=False)
    if idx.min() < 0 or idx.max() >= data.p:
        raise IndexError("selected index out of range")
    if lam_refit <= 0:
        raise SingularSystem("ridge refit requires a positive lambda")
    XS = data.X[:, idx]
    n = data.n
    G = XS.T @ XS / n
    rhs = XS.T @ data.y / n
    used_ridge = idx.size >= n
    singular = False
    if not used_ridge:
        try:
            L = np.linalg.cholesky(G)
            if np.linalg.cond(G) > _REFIT_COND_LIMIT:
                raise np.linalg.LinAlgError
            beta[idx] = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        except np.linalg.LinAlgError:
            singular = True
            used_ridge = True
    if used_ridge:
        beta[idx] = np.linalg.solve(G + lam_refit * np.eye(idx.size), rhs)
    slopes, intercept = original_scale(data, beta)
    return RefitResult(coef=slopes, intercept=float(intercept), used_ridge=used_ridge, singular=singular)


def spsp_select(
    data: Dataset,
    path: CoefficientPath,
    R_override: float | None = None,
    fallback_R: float = DEFAULT_FALLBACK_R,
) -> PartitionResult:
    """Partition ``path`` and attach the refit on ``data``."""
    res = spsp_partition(path, R_override=R_override, fallback_R=fallback_R)
    return PartitionResult(
        lambdas=res.lambdas,
        boundary=res.boundary,
        relevant_sets=res.relevant_sets,
        selected=res.selected,
        R_used=res.R_used,
        R_estimated=res.R_estimated,
        refit=refit(data, res.selected),
    )
