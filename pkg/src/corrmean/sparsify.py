"""Node-side encoders.

``rand_k_encode`` and ``top_k_encode`` put raw entries on the wire; scaling is
left to the server. ``wangni_encode`` and ``induced_encode`` know per-coordinate
keep probabilities that the server does not, so they send values that are
already unbiased and pair with :func:`corrmean.estimate.decode_prescaled`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BudgetError, SparseMessage, as_vector

ENCODER_KINDS = ("rand_k", "top_k", "wangni", "induced")


def _check_budget(k: int, d: int) -> int:
    k = int(k)
    if not 1 <= k <= d:
        raise BudgetError(f"budget k={k} outside [1, {d}]")
    return k


def induced_split(k: int, top_fraction: float) -> tuple[int, int]:
    """``(k_top, k_rand)`` for the induced compressor; both stages must be non-empty."""
    if not 0.0 < top_fraction < 1.0:
        raise BudgetError(f"induced_top_fraction must lie in (0, 1), got {top_fraction}")
    k_top = int(np.floor(top_fraction * k + 0.5))
    if not 1 <= k_top <= k - 1:
        raise BudgetError(f"k={k} with top fraction {top_fraction} gives k_top={k_top}; need 1 <= k_top <= k-1")
    return k_top, k - k_top


@dataclass(frozen=True)
class EncoderSpec:
    kind: str
    k: int
    induced_top_fraction: float = 0.5

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder {self.kind!r}; expected one of {ENCODER_KINDS}")
        if int(self.k) < 1:
            raise BudgetError(f"budget k={self.k} must be >= 1")
        if self.kind == "induced":
            induced_split(int(self.k), self.induced_top_fraction)

    @property
    def prescaled(self) -> bool:
        """True when the wire values are already unbiased (no decoder-side scaling)."""
        return self.kind in ("wangni", "induced")

    def encode(self, x, rng: np.random.Generator | None = None) -> SparseMessage:
        if self.kind == "rand_k":
            return rand_k_encode(x, self.k, rng)
        if self.kind == "top_k":
            return top_k_encode(x, self.k)
        if self.kind == "wangni":
            return wangni_encode(x, self.k, rng)
        return induced_encode(x, self, rng)


def rand_k_encode(x, k: int, rng: np.random.Generator) -> SparseMessage:
    """Keep ``k`` coordinates chosen uniformly without replacement; values are raw."""
    x = as_vector(x)
    d = x.size
    k = _check_budget(k, d)
    idx = np.sort(rng.choice(d, size=k, replace=False))
    return SparseMessage(d, idx, x[idx])


def top_k_encode(x, k: int) -> SparseMessage:
    """Keep the ``k`` largest-magnitude entries; ties go to the lower index."""
    x = as_vector(x)
    k = _check_budget(k, x.size)
    order = np.argsort(-np.abs(x), kind="stable")
    idx = np.sort(order[:k])
    return SparseMessage(x.size, idx, x[idx])


def wangni_probabilities(x, k: int) -> np.ndarray:
    """Keep-probabilities ``p_j`` proportional to ``|x_j|``, water-filled so that ``sum(p) = k``.

    Coordinates whose proportional share reaches 1 are fixed at 1 and the
    remaining budget is redistributed over the rest. At most ``d`` passes.
    """
    x = as_vector(x)
    d = x.size
    k = _check_budget(k, d)
    a = np.abs(x)
    p = np.zeros(d)
    active = a > 0
    budget = float(k)
    for _ in range(d):
        if budget <= 0 or not active.any():
            break
        q = np.zeros(d)
        q[active] = budget * (a[active] / a[active].sum())
        saturated = active & (q >= 1.0)
        if not saturated.any():
            p[active] = q[active]
            break
        p[saturated] = 1.0
        active &= ~saturated
        budget -= float(saturated.sum())
    return p


def wangni_encode(x, k: int, rng: np.random.Generator) -> SparseMessage:
    """Independent per-coordinate sampling with magnitude-proportional probabilities.

    Kept values are sent as ``x_j / p_j``. The expected number of kept
    coordinates is ``min(k, nnz(x))``; the realised count varies.
    """
    x = as_vector(x)
    p = wangni_probabilities(x, k)
    u = rng.random(x.size)
    keep = np.flatnonzero(u < p)
    return SparseMessage(x.size, keep, x[keep] / p[keep])


def induced_encode(x, spec: EncoderSpec, rng: np.random.Generator) -> SparseMessage:
    """Top-k on ``x`` plus unbiased Rand-k on the residual, merged into one message.

    The random stage is scaled by ``d / k_rand``. The residual is zero on the
    top-k support, so overlapping indices merge to the top-k value.
    """
    if spec.kind != "induced":
        raise ValueError(f"induced_encode needs an induced spec, got {spec.kind!r}")
    x = as_vector(x)
    d = x.size
    k = _check_budget(spec.k, d)
    k_top, k_rand = induced_split(k, spec.induced_top_fraction)
    top = top_k_encode(x, k_top)
    residual = x.copy()
    residual[top.indices] = 0.0
    rnd = rand_k_encode(residual, k_rand, rng)
    dense = np.zeros(d)
    sent = np.zeros(d, dtype=bool)
    dense[top.indices] += top.values
    sent[top.indices] = True
    dense[rnd.indices] += rnd.values * (d / k_rand)
    sent[rnd.indices] = True
    idx = np.flatnonzero(sent)
    return SparseMessage(d, idx, dense[idx])
