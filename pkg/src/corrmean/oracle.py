"""Ground truth for the estimators: exhaustive enumeration and seeded Monte Carlo.

Enumeration walks every n-tuple of k-subsets (lexicographic subsets per node,
odometer over nodes with the last node fastest), decodes each pattern through
the public message decoders, weights every pattern by 1 and divides once at
the end.

Monte Carlo draws trials in fixed blocks of ``block_size``; block ``b`` uses
the stream ``rng.stream(seed, f"mc.{b}")``. Because block boundaries do not
depend on the worker count, results are identical for any number of threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CorrMeanError, SparseMessage, as_matrix, as_vector, exact_mean
from .estimate import Decoder
from .rng import ordered_map, stream
from .sparsify import EncoderSpec, induced_split, top_k_encode, wangni_probabilities

DEFAULT_MAX_PATTERNS = 10**7
DEFAULT_BLOCK_SIZE = 1000


class PatternLimitError(CorrMeanError):
    """Raised when exhaustive enumeration would exceed the pattern budget."""


@dataclass(frozen=True)
class ExactResult:
    bias: np.ndarray
    mse: float
    patterns: int


@dataclass(frozen=True)
class MonteCarloResult:
    mean_estimate: np.ndarray
    mse: float
    stderr: float  # NaN when trials == 1
    trials: int


def pattern_count(n: int, d: int, k: int) -> int:
    return math.comb(d, k) ** n


def enumerate_exact(vectors, k: int, decoder: Decoder, max_patterns: int = DEFAULT_MAX_PATTERNS) -> ExactResult:
    """Exact ``E[x_hat] - x_bar`` and ``E|x_hat - x_bar|^2`` over all Rand-k patterns."""
    if decoder.kind == "prescaled":
        raise ValueError("enumerate_exact covers Rand-k decoders; use encoder_expectation for prescaled encoders")
    X = as_matrix(vectors)
    n, d = X.shape
    total = pattern_count(n, d, k)
    if total > max_patterns:
        raise PatternLimitError(
            f"C({d},{k})^{n} = {total} patterns exceeds the limit {max_patterns}; use monte_carlo instead"
        )
    subsets = [np.array(s, dtype=np.int64) for s in itertools.combinations(range(d), k)]
    x_bar = exact_mean(X)
    est_sum = np.zeros(d)
    errs = []
    for choice in itertools.product(range(len(subsets)), repeat=n):
        messages = [SparseMessage(d, subsets[s], X[i, subsets[s]]) for i, s in enumerate(choice)]
        est = decoder.decode(messages, k)
        est_sum += est
        diff = est - x_bar
        errs.append(float(diff @ diff))
    return ExactResult(est_sum / total - x_bar, math.fsum(errs) / total, total)


def encoder_expectation(x, spec: EncoderSpec) -> tuple[np.ndarray, float]:
    """Exact mean and ``E|x_hat - x|^2`` of a single node's decoded message.

    Rand-k is decoded with ``d/k`` scaling; Wangni and induced messages are
    taken at face value. Enumerates all C(d, k) subsets, all 2^d keep
    patterns (Wangni), or all C(d, k_rand) residual picks (induced).
    """
    x = as_vector(x)
    d = x.size
    outcomes: list[tuple[float, np.ndarray]] = []
    if spec.kind == "rand_k":
        w = 1.0 / math.comb(d, spec.k)
        for s in itertools.combinations(range(d), spec.k):
            est = np.zeros(d)
            est[list(s)] = x[list(s)] * (d / spec.k)
            outcomes.append((w, est))
    elif spec.kind == "wangni":
        p = wangni_probabilities(x, spec.k)
        for keep in itertools.product((False, True), repeat=d):
            keep = np.array(keep)
            w = float(np.prod(np.where(keep, p, 1.0 - p)))
            if w == 0.0:
                continue
            est = np.zeros(d)
            est[keep] = x[keep] / p[keep]
            outcomes.append((w, est))
    elif spec.kind == "induced":
        k_top, k_rand = induced_split(spec.k, spec.induced_top_fraction)
        top = top_k_encode(x, k_top)
        residual = x.copy()
        residual[top.indices] = 0.0
        w = 1.0 / math.comb(d, k_rand)
        for s in itertools.combinations(range(d), k_rand):
            est = top.to_dense()
            est[list(s)] += residual[list(s)] * (d / k_rand)
            outcomes.append((w, est))
    else:
        raise ValueError(f"{spec.kind!r} is biased; no unbiased expectation to enumerate")
    mean = np.zeros(d)
    for w, est in outcomes:
        mean += w * est
    second = math.fsum(w * float((est - x) @ (est - x)) for w, est in outcomes)
    return mean, second


def random_k_masks(rng: np.random.Generator, shape: tuple[int, ...], d: int, k: int) -> np.ndarray:
    """Boolean masks of shape ``shape + (d,)``, each row a uniform k-subset.

    Vectorised Floyd sampling: for j = d-k..d-1 draw t in [0, j] and take t,
    or j if t is already taken.
    """
    rows = int(np.prod(shape, dtype=np.int64))
    mask = np.zeros((rows, d), dtype=bool)
    ar = np.arange(rows)
    for j in range(d - k, d):
        t = rng.integers(0, j + 1, size=rows)
        t = np.where(mask[ar, t], j, t)
        mask[ar, t] = True
    return mask.reshape(*shape, d)


def monte_carlo(
    vectors,
    k: int,
    decoder: Decoder | Sequence[Decoder],
    trials: int,
    seed: int,
    threads: int | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
):
    """Seeded Monte Carlo estimate of the mean estimate and MSE.

    ``decoder`` may be a sequence; all decoders then see the same sampling
    patterns and a list of results is returned. ``stderr`` is the sample
    standard deviation of the per-trial squared error over ``sqrt(trials)``,
    NaN for a single trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    single = isinstance(decoder, Decoder)
    decoders = [decoder] if single else list(decoder)
    X = as_matrix(vectors)
    n, d = X.shape
    if not 1 <= k <= d:
        raise ValueError(f"budget k={k} outside [1, {d}]")
    x_bar = exact_mean(X)
    n_blocks = -(-trials // block_size)

    def run_block(b: int):
        size = min(block_size, trials - b * block_size)
        masks = random_k_masks(stream(seed, f"mc.{b}"), (size, n), d, k)
        out = []
        for dec in decoders:
            est = dec.decode_masks(masks, X, k)
            diff = est - x_bar
            out.append((est.sum(axis=0), np.einsum("ij,ij->i", diff, diff)))
        return out

    blocks = ordered_map(run_block, range(n_blocks), threads)
    results = []
    for j in range(len(decoders)):
        est_sum = np.zeros(d)
        for blk in blocks:
            est_sum += blk[j][0]
        errs = np.concatenate([blk[j][1] for blk in blocks])
        mse = float(errs.mean())
        stderr = float(errs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
        results.append(MonteCarloResult(est_sum / trials, mse, stderr, trials))
    return results[0] if single else results
