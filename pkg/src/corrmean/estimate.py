"""Server-side decoders and temporal memory management."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence

import numpy as np

from .core import (
    BudgetError,
    DimensionMismatchError,
    MemoryModeError,
    ServerMemory,
    SparseMessage,
    TFunction,
    as_vector,
    hit_counts,
    message_dim,
)


def binom_pmf(trials: int, p: float) -> np.ndarray:
    """Binomial(trials, p) probabilities for 0..trials.

    Anchored at the mode in log space, filled outward by the ratio recurrence
    and renormalised, so nothing underflows for trials in the tens of
    thousands.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    out = np.zeros(trials + 1)
    if trials == 0:
        out[0] = 1.0
        return out
    if p == 0.0:
        out[0] = 1.0
        return out
    if p == 1.0:
        out[-1] = 1.0
        return out
    odds = p / (1.0 - p)
    mode = min(trials, int(math.floor((trials + 1) * p)))
    out[mode] = math.exp(
        math.lgamma(trials + 1)
        - math.lgamma(mode + 1)
        - math.lgamma(trials - mode + 1)
        + mode * math.log(p)
        + (trials - mode) * math.log1p(-p)
    )
    for m in range(mode, trials):
        out[m + 1] = out[m] * (trials - m) / (m + 1) * odds
    for m in range(mode, 0, -1):
        out[m - 1] = out[m] * m / (trials - m + 1) / odds
    # the recurrence fixes the shape; renormalising removes the lgamma rounding in the anchor
    return out / math.fsum(out)


def _check_p(p) -> None:
    if not 0 < p <= 1:
        raise ValueError(f"sampling probability must lie in (0, 1], got {p}")


def beta_bar(t: TFunction, p: Real) -> float:
    """Normalising constant that makes the Rand-k-Spatial estimate unbiased.

    ``1 / beta_bar = sum_m (p / T(m)) * P(1 + Binomial(n-1, p) = m)``.
    Pass ``p`` as ``Fraction(k, d)`` to get ``d/k`` to the last bit for
    ``T == 1``. Returns ``0.0`` when some ``T(m) == 0``; decoders then output
    the zero vector.
    """
    _check_p(p)
    if t.kind == "rand_k":
        return float(1 / Fraction(p)) if isinstance(p, (int, Fraction)) else 1.0 / float(p)
    table = t.table()[1:]
    if np.any(table < 0):
        raise ValueError("T(m) must be non-negative")
    if t.degenerate:
        return 0.0
    pf = float(p)
    weights = binom_pmf(t.n - 1, pf)
    return 1.0 / (pf * math.fsum(weights / table))


def _check_budget_messages(messages: Sequence[SparseMessage], k: int) -> int:
    d = message_dim(messages)
    k = int(k)
    if not 1 <= k <= d:
        raise BudgetError(f"budget k={k} outside [1, {d}]")
    for i, m in enumerate(messages):
        if m.nnz != k:
            raise BudgetError(f"node {i} sent {m.nnz} coordinates, expected the common budget k={k}")
    return d


def _sum_messages(messages: Sequence[SparseMessage], d: int) -> np.ndarray:
    acc = np.zeros(d)
    for m in messages:
        acc[m.indices] += m.values
    return acc


def decode_rand_k(messages: Sequence[SparseMessage], k: int) -> np.ndarray:
    """Plain Rand-k mean estimate ``(1/n)(d/k) sum_i h_i``."""
    d = _check_budget_messages(messages, k)
    return _sum_messages(messages, d) * (d / k) / len(messages)


def decode_prescaled(messages: Sequence[SparseMessage]) -> np.ndarray:
    """Average of messages whose values are already unbiased, missing entries as zero."""
    d = message_dim(messages)
    return _sum_messages(messages, d) / len(messages)


def decode_rand_k_spatial(messages: Sequence[SparseMessage], k: int, t: TFunction) -> np.ndarray:
    """Rand-k-Spatial estimate: coordinate j is ``(1/n)(beta_bar / T(M_j)) sum_i h_ij``.

    Coordinates nobody sent decode to 0.
    """
    d = _check_budget_messages(messages, k)
    n = len(messages)
    if t.n != n:
        raise ValueError(f"T function is for n={t.n} nodes but {n} messages were given")
    beta = beta_bar(t, Fraction(int(k), d))
    if beta == 0.0:
        return np.zeros(d)
    counts = hit_counts(messages).counts
    scale = beta / t.table()[counts]
    scale[counts == 0] = 0.0
    return _sum_messages(messages, d) * scale / n


def decode_rand_k_temporal(messages: Sequence[SparseMessage], k: int, memory: ServerMemory) -> np.ndarray:
    """Rand-k-Temporal estimate.

    Node i's vector is filled in from memory: unsent coordinates take ``b_ij``,
    sent ones ``b_ij + (d/k)(x_ij - b_ij)``; the estimate is their average.
    """
    d = _check_budget_messages(messages, k)
    n = len(messages)
    if memory.dim != d:
        raise DimensionMismatchError(f"memory dim {memory.dim} != message dim {d}")
    if memory.mode == "per_node" and memory.vectors.shape[0] != n:
        raise ValueError(f"per-node memory holds {memory.vectors.shape[0]} nodes, got {n} messages")
    # sum_i b_i + (d/k) * sum_i (h_i - b_i on the sent support); with b = 0 this
    # is bit-identical to decode_rand_k
    base = np.zeros(d)
    corr = np.zeros(d)
    for i, m in enumerate(messages):
        b = memory.for_node(i)
        base += b
        corr[m.indices] += m.values - b[m.indices]
    return (base + corr * (d / k)) / n


def memory_update_per_node(memory: ServerMemory, messages: Sequence[SparseMessage]) -> ServerMemory:
    """Overwrite each node's stored entries with the coordinates it just sent."""
    if memory.mode != "per_node":
        raise MemoryModeError("memory_update_per_node needs per_node memory")
    if len(messages) != memory.vectors.shape[0]:
        raise ValueError(f"memory holds {memory.vectors.shape[0]} nodes, got {len(messages)} messages")
    new = memory.vectors.copy()
    for i, m in enumerate(messages):
        if m.dim != memory.dim:
            raise DimensionMismatchError(f"message dim {m.dim} != memory dim {memory.dim}")
        new[i, m.indices] = m.values
    return ServerMemory("per_node", new)


def memory_update_shared(memory: ServerMemory, mean_estimate) -> ServerMemory:
    """Shared O(d) memory: store the latest mean estimate for every node."""
    if memory.mode != "shared":
        raise MemoryModeError("memory_update_shared needs shared memory")
    est = as_vector(mean_estimate, "mean_estimate")
    if est.size != memory.dim:
        raise DimensionMismatchError(f"estimate dim {est.size} != memory dim {memory.dim}")
    return ServerMemory("shared", est.copy())


DECODER_KINDS = ("rand_k", "spatial", "temporal", "prescaled")


@dataclass(frozen=True)
class Decoder:
    """A decoder choice bundled with its parameters (T function or memory).

    ``decode`` works on messages. ``decode_masks`` evaluates the same
    estimator for many Rand-k sampling patterns at once, given the true node
    vectors; it is what Monte Carlo uses.
    """

    kind: str
    t: TFunction | None = None
    memory: ServerMemory | None = None

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValueError(f"unknown decoder {self.kind!r}; expected one of {DECODER_KINDS}")
        if self.kind == "spatial" and self.t is None:
            raise ValueError("spatial decoder needs a T function")
        if self.kind == "temporal" and self.memory is None:
            raise ValueError("temporal decoder needs a memory")

    @property
    def name(self) -> str:
        if self.kind == "spatial":
            return self.t.kind
        return self.kind

    def decode(self, messages: Sequence[SparseMessage], k: int | None = None) -> np.ndarray:
        if self.kind == "rand_k":
            return decode_rand_k(messages, k)
        if self.kind == "spatial":
            return decode_rand_k_spatial(messages, k, self.t)
        if self.kind == "temporal":
            return decode_rand_k_temporal(messages, k, self.memory)
        return decode_prescaled(messages)

    def decode_masks(self, masks: np.ndarray, vectors: np.ndarray, k: int) -> np.ndarray:
        """Estimates for a batch of patterns; ``masks`` has shape ``(..., n, d)``."""
        n, d = vectors.shape
        if masks.shape[-2:] != (n, d):
            raise DimensionMismatchError(f"masks trailing shape {masks.shape[-2:]} != {(n, d)}")
        if self.kind == "rand_k":
            return (masks * vectors).sum(axis=-2) * (d / k) / n
        if self.kind == "spatial":
            beta = beta_bar(self.t, Fraction(int(k), d))
            if beta == 0.0:
                return np.zeros(masks.shape[:-2] + (d,))
            counts = masks.sum(axis=-2)
            scale = beta / self.t.table()[counts]
            scale[counts == 0] = 0.0
            return (masks * vectors).sum(axis=-2) * scale / n
        if self.kind == "temporal":
            b = self.memory.as_matrix(n)
            corr = (masks * (vectors - b)).sum(axis=-2)
            return (b.sum(axis=0) + corr * (d / k)) / n
        raise ValueError("prescaled decoding has no Rand-k pattern form")
