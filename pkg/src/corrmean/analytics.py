"""Closed-form error expressions for the Rand-k, Rand-k-Spatial and Rand-k-Temporal estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from .core import DimensionMismatchError, ServerMemory, TFunction, as_matrix
from .estimate import _check_p, beta_bar, binom_pmf


@dataclass(frozen=True)
class CorrelationSummary:
    """``r1 = sum_i |x_i|^2``, ``r2 = 2 sum_{i<l} <x_i, x_l>`` and ``rho = r2 / r1``.

    ``rho`` is ``None`` when ``r1 == 0`` (all vectors zero).
    """

    r1: float
    r2: float
    rho: float | None


def _exact_integers(X: np.ndarray) -> tuple[np.ndarray, int]:
    """Write every entry of ``X`` as ``N * 2**shift`` with Python-int ``N`` (exact)."""
    mant, expo = np.frexp(X)
    ints = (mant * 2.0**53).astype(np.int64)  # exact: |mant| < 1
    nz = ints != 0
    if not nz.any():
        return np.zeros(X.shape, dtype=object), 0
    base = int(expo[nz].min()) - 53
    shifts = (expo.astype(np.int64) - 53 - base).astype(object)
    shifts[~nz] = 0
    return ints.astype(object) * (2 ** shifts), base


def correlation_summary(vectors) -> CorrelationSummary:
    """R1, R2 and their ratio, computed in exact integer arithmetic and rounded once.

    Exactness makes the range ``-1 <= rho <= n-1`` hold without rounding slack
    and gives ``rho == n-1`` exactly for identical vectors.
    """
    X = as_matrix(vectors)
    N, shift = _exact_integers(X)
    r1_int = int(sum(int(v) * int(v) for v in N.ravel()))
    col = N.sum(axis=0)
    total_int = int(sum(int(v) * int(v) for v in np.ravel(col)))
    r2_int = total_int - r1_int
    unit = Fraction(2) ** (2 * shift)
    r1 = float(r1_int * unit)
    r2 = float(r2_int * unit)
    rho = float(Fraction(r2_int, r1_int)) if r1_int else None
    return CorrelationSummary(r1, r2, rho)


def c1_c2(t: TFunction, p: Real) -> tuple[float, float]:
    """Excess-variance coefficient ``c1`` and cross-term discount ``c2`` for ``T``.

    ``c1 = beta^2 sum_{m>=1} p/T(m)^2 P(1+Bin(n-1,p)=m) - 1/p`` and
    ``c2 = 1 - beta^2 sum_{m>=2} p^2/T(m)^2 P(2+Bin(n-2,p)=m)``.
    When ``beta == 0`` (degenerate T) the sums are dropped: ``c1 = -1/p``, ``c2 = 1``.
    With one node the ``c2`` sum is empty, so ``c2 = 1``; it multiplies R2,
    which is identically zero then.
    """
    _check_p(p)
    n = t.n
    inv_p = float(1 / Fraction(p)) if isinstance(p, (int, Fraction)) else 1.0 / float(p)
    beta = beta_bar(t, p)
    if beta == 0.0:
        return -inv_p, 1.0
    pf = float(p)
    tsq = t.table()[1:] ** 2
    s1 = math.fsum(binom_pmf(n - 1, pf) * pf / tsq)
    c1 = beta * beta * s1 - inv_p
    if n < 2:
        return c1, 1.0
    s2 = math.fsum(binom_pmf(n - 2, pf) * pf * pf / tsq[1:])
    c2 = 1.0 - beta * beta * s2
    return c1, c2


def _check_k(k: int, d: int) -> None:
    if not 1 <= int(k) <= d:
        raise ValueError(f"budget k={k} outside [1, {d}]")


def mse_rand_k(vectors, k: int) -> float:
    """``(1/n^2)(d/k - 1) R1``."""
    X = as_matrix(vectors)
    n, d = X.shape
    _check_k(k, d)
    r1 = math.fsum((X * X).ravel())
    return (d / k - 1.0) * r1 / (n * n)


def mse_spatial(vectors, k: int, t: TFunction) -> float:
    """``(1/n^2)[(d/k - 1) R1 + c1 R1 - c2 R2]``.

    For a degenerate ``T`` the decoder outputs zero, so the error returned is
    ``|mean|^2`` (zero when rho = -1, where such a T arises).
    """
    X = as_matrix(vectors)
    n, d = X.shape
    _check_k(k, d)
    if t.n != n:
        raise ValueError(f"T function is for n={t.n} nodes, got {n} vectors")
    s = correlation_summary(X)
    p = Fraction(int(k), d)
    if t.degenerate:
        return (s.r1 + s.r2) / (n * n)
    c1, c2 = c1_c2(t, p)
    return ((d / k - 1.0) * s.r1 + c1 * s.r1 - c2 * s.r2) / (n * n)


def mse_temporal(vectors, memory: ServerMemory, k: int) -> float:
    """``(1/n^2)(d/k - 1) sum_i |x_i - b_i|^2``."""
    X = as_matrix(vectors)
    n, d = X.shape
    _check_k(k, d)
    if memory.dim != d:
        raise DimensionMismatchError(f"memory dim {memory.dim} != {d}")
    diff = X - memory.as_matrix(n)
    return (d / k - 1.0) * math.fsum((diff * diff).ravel()) / (n * n)


def optimal_t(rho: float, n: int) -> TFunction:
    """MSE-minimising member of the spatial family for a known ``rho = R2/R1``."""
    if not -1.0 <= rho <= n - 1:
        raise ValueError(f"rho={rho} outside the feasible range [-1, {n - 1}]")
    return TFunction("spatial_opt", n, rho)


def eta_bound(n: int, d: int, k: int) -> float:
    """Largest step size for which temporal GD on the quadratic objective provably converges.

    ``min(1 / (1 + 8 alpha), p / 2)`` with ``alpha = (d/k - 1)/n`` and ``p = k/d``.
    """
    _check_k(k, d)
    alpha = (d / k - 1.0) / n
    return min(1.0 / (1.0 + 8.0 * alpha), (k / d) / 2.0)
