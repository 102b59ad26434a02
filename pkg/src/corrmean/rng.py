"""Labelled random streams derived from one master seed.

Every consumer asks for a stream by a text label (``"split"``, ``"init"``,
``"round.3.node.7"``, ``"mc.12"``, ...). The stream depends only on
``(seed, label)``, so results do not depend on execution order or on how
many worker threads are used.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

_MASK64 = (1 << 64) - 1

A = TypeVar("A")
B = TypeVar("B")


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed for ``label``: first word of ``SeedSequence([seed, H(label)])``."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, _label_key(label)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, label)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & _MASK64, _label_key(label)])))


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``$CORRMEAN_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("CORRMEAN_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def ordered_map(fn: Callable[[A], B], items: Iterable[A], threads: int | None = None) -> list[B]:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order is input order."""
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
