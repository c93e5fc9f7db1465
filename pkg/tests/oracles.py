"""Slow, independent reference implementations used as test oracles.

Written straight from the algorithm's definition with 1-based order
statistics and plain Python lists, and deliberately sharing no code with
the package.
"""

import math

import numpy as np


def _order_stats(b):
    # b_(0) = 0 prepended, then the sorted values
    return [0.0] + sorted(float(v) for v in b)


def _distances(b):
    s = _order_stats(b)
    return [s[i] - s[i - 1] for i in range(1, len(s))]  # D_1..D_p at list positions 0..p-1


def _largest_last(D, upto):
    # location (1-based) of the max over D_1..D_upto, last index among ties
    best, where = -1.0, 0
    for j in range(1, upto + 1):
        if D[j - 1] >= best:
            best, where = D[j - 1], j
    below = max(D[: where - 1]) if where > 1 else 0.0
    return where, best, below


def brute_R(b1, fallback=5.0):
    D = _distances(b1)
    _, dmax, dmax2 = _largest_last(D, len(D))
    if dmax == 0 or dmax2 == 0:
        return fallback
    return dmax / dmax2


def brute_spsp(B, R=None, fallback=5.0):
    """Selected set (0-based indices), per-step sets, boundaries and R for a K x p path of ascending lambda."""
    B = [[abs(float(v)) for v in row] for row in np.asarray(B)]
    p = len(B[0])
    if R is None:
        R = brute_R(B[0], fallback)
    T = math.inf
    S = set()
    Sc = set(range(p))
    union = set(S)
    sets, bounds = [tuple()], [T]
    for b in B[1:]:
        T = max(b[j] for j in Sc) if Sc else 0.0
        S = {j for j in range(p) if b[j] > T}
        Sc = set(range(p)) - S
        s = len(S)
        D = _distances(b)
        gap = D[p - s] if s >= 1 else 0.0  # D_{p-s+1}
        if p - s >= 1:
            jt, dmax, dmax2 = _largest_last(D, p - s)
            if gap <= R * dmax and dmax > R * dmax2:
                T = _order_stats(b)[jt - 1]
                S = {j for j in range(p) if b[j] > T}
                Sc = set(range(p)) - S
        union |= S
        sets.append(tuple(sorted(S)))
        bounds.append(T)
    return tuple(sorted(union)), sets, bounds, R


def random_path(rng, p=None, K=None):
    """A path-like K x p array: coefficients enter at random steps and mostly grow as lambda shrinks.

    Values are drawn on a coarse grid so ties and exact zeros occur often.
    """
    p = p or int(rng.integers(1, 9))
    K = K or int(rng.integers(2, 11))
    kind = rng.integers(0, 3)
    if kind == 0:
        B = rng.integers(0, 6, size=(K, p)) / 4.0
    elif kind == 1:
        B = np.zeros((K, p))
        for j in range(p):
            enter = int(rng.integers(0, K + 1))
            slope = rng.choice([0.05, 0.1, 0.5, 1.0, 3.0])
            for k in range(K):
                steps = enter - k  # rows are ascending lambda, so small k is a small lambda
                B[k, j] = max(steps, 0) * slope
    else:
        B = np.round(rng.exponential(1.0, size=(K, p)), 2) * (rng.random((K, p)) < 0.6)
    signs = rng.choice([-1.0, 1.0], size=B.shape)
    return B * signs
