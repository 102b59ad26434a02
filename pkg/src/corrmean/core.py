"""Shared value types and hit counting.

Vectors are plain 1-D ``float64`` numpy arrays. Coordinates are 0-indexed
everywhere, including on the wire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class CorrMeanError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(CorrMeanError, ValueError):
    pass


class BudgetError(CorrMeanError, ValueError):
    """Sparsification budget outside ``1 <= k <= d`` (or an invalid split)."""


class MemoryModeError(CorrMeanError, ValueError):
    pass


def as_vector(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite, non-empty 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_matrix(vectors, name: str = "vectors") -> np.ndarray:
    """Stack node vectors into an ``(n, d)`` float64 array."""
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionMismatchError(f"{name} must have shape (n, d) with n, d >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def exact_mean(X: np.ndarray) -> np.ndarray:
    """Column means of ``X`` from correctly rounded column sums (order independent)."""
    return np.array([math.fsum(col) for col in X.T]) / X.shape[0]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SparseMessage:
    """What a node puts on the wire: ``dim``, sorted indices, and their values."""

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise DimensionMismatchError(f"dim must be positive, got {self.dim}")
        idx = np.array(self.indices, dtype=np.int64).reshape(-1)
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != vals.shape:
            raise ValueError(f"{idx.size} indices but {vals.size} values")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= dim:
                raise DimensionMismatchError(f"index out of range for dim {dim}")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "indices", _frozen(idx))
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def scaled(self, factor: float) -> "SparseMessage":
        return SparseMessage(self.dim, self.indices, self.values * factor)


def message_dim(messages: Sequence[SparseMessage]) -> int:
    """Common dimension of ``messages``; raises on disagreement or empty input."""
    if len(messages) == 0:
        raise ValueError("no messages")
    d = messages[0].dim
    for m in messages[1:]:
        if m.dim != d:
            raise DimensionMismatchError(f"messages disagree on dimension: {d} vs {m.dim}")
    return d


@dataclass(frozen=True)
class HitCounts:
    """``counts[j]`` is the number of nodes whose message carries coordinate ``j``."""

    counts: np.ndarray
    n: int


def hit_counts(messages: Sequence[SparseMessage], dim: int | None = None) -> HitCounts:
    """Count, per coordinate, how many messages include it.

    ``dim`` is only needed when ``messages`` is empty.
    """
    if len(messages) == 0:
        if dim is None:
            raise ValueError("dim is required when there are no messages")
        return HitCounts(_frozen(np.zeros(dim, dtype=np.int64)), 0)
    d = message_dim(messages)
    if dim is not None and dim != d:
        raise DimensionMismatchError(f"expected dim {dim}, messages have {d}")
    counts = np.zeros(d, dtype=np.int64)
    for m in messages:
        counts[m.indices] += 1
    return HitCounts(_frozen(counts), len(messages))


T_KINDS = ("rand_k", "spatial_max", "spatial_avg", "spatial_opt", "custom")


@dataclass(frozen=True)
class TFunction:
    """A member of the Rand-k-Spatial family: the scaling divisor ``T(m)``, m = 1..n.

    ``rho`` (the R2/R1 value) is only used by ``spatial_opt``; ``values``
    holds ``T(1..n)`` for ``custom``.
    """

    kind: str
    n: int
    rho: float | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in T_KINDS:
            raise ValueError(f"unknown T kind {self.kind!r}; expected one of {T_KINDS}")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        if self.kind == "spatial_opt":
            if self.rho is None:
                raise ValueError("spatial_opt needs rho")
            object.__setattr__(self, "rho", float(self.rho))
        if self.kind == "custom":
            vals = tuple(float(v) for v in (self.values if self.values is not None else ()))
            if len(vals) != self.n:
                raise ValueError(f"custom T needs {self.n} values, got {len(vals)}")
            if any(not math.isfinite(v) or v < 0 for v in vals):
                raise ValueError("custom T values must be finite and non-negative")
            object.__setattr__(self, "values", vals)

    @classmethod
    def from_table(cls, values) -> "TFunction":
        """Arbitrary family member given ``T(1), ..., T(n)``."""
        vals = tuple(float(v) for v in values)
        return cls("custom", len(vals), values=vals)

    def __call__(self, m):
        if self.kind == "custom":
            return np.asarray(self.values)[np.asarray(m, dtype=np.int64) - 1]
        m = np.asarray(m, dtype=np.float64)
        # (m-1)/(n-1); for n == 1 only m == 1 exists and the slope term vanishes
        frac = (m - 1.0) / (self.n - 1) if self.n > 1 else np.zeros_like(m)
        if self.kind == "rand_k":
            return np.ones_like(m)
        if self.kind == "spatial_max":
            return m.copy()
        if self.kind == "spatial_avg":
            return 1.0 + (self.n / 2.0) * frac
        return 1.0 + self.rho * frac

    def table(self) -> np.ndarray:
        """``T(m)`` for m = 0..n; entry 0 is a placeholder (never used)."""
        out = np.ones(self.n + 1)
        out[1:] = self(np.arange(1, self.n + 1))
        return out

    @property
    def degenerate(self) -> bool:
        """True when some ``T(m) == 0`` (``spatial_opt`` at rho = -1, or a custom table)."""
        return bool(np.any(self.table()[1:] == 0.0))


@dataclass(frozen=True)
class ServerMemory:
    """Decoder-side fill-in vectors for temporal decoding.

    ``per_node`` mode keeps one vector per node (shape ``(n, d)``); ``shared``
    mode keeps a single vector (shape ``(d,)``) used for every node.
    """

    mode: str
    vectors: np.ndarray

    def __post_init__(self):
        if self.mode not in ("per_node", "shared"):
            raise MemoryModeError(f"unknown memory mode {self.mode!r}")
        v = np.array(self.vectors, dtype=np.float64)
        want = 2 if self.mode == "per_node" else 1
        if v.ndim != want:
            raise DimensionMismatchError(f"{self.mode} memory needs a {want}-D array, got shape {v.shape}")
        object.__setattr__(self, "vectors", _frozen(v))

    @classmethod
    def zeros_per_node(cls, n: int, d: int) -> "ServerMemory":
        return cls("per_node", np.zeros((n, d)))

    @classmethod
    def zeros_shared(cls, d: int) -> "ServerMemory":
        return cls("shared", np.zeros(d))

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[-1])

    def for_node(self, i: int) -> np.ndarray:
        return self.vectors[i] if self.mode == "per_node" else self.vectors

    def as_matrix(self, n: int) -> np.ndarray:
        """Fill-in vectors broadcast to ``(n, d)``."""
        if self.mode == "per_node":
            if self.vectors.shape[0] != n:
                raise DimensionMismatchError(f"memory holds {self.vectors.shape[0]} nodes, got {n}")
            return self.vectors
        return np.broadcast_to(self.vectors, (n, self.dim))


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    task_loss: float
    est_mse: float
    r2_over_r1: float
    extra: dict = field(default_factory=dict)
