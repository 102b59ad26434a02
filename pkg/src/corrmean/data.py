"""Dataset ingestion, synthetic generators, and IID / non-IID node partitions."""

from __future__ import annotations

import csv
import gzip
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import CorrMeanError
from .rng import stream

IDX_IMAGES_MAGIC = 2051  # 00 00 08 03: unsigned byte, 3 dims
IDX_LABELS_MAGIC = 2049  # 00 00 08 01: unsigned byte, 1 dim


class DataFormatError(CorrMeanError, ValueError):
    pass


class Shard(NamedTuple):
    rows: np.ndarray
    labels: np.ndarray
    index: np.ndarray  # positions in the source arrays


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_idx(raw: bytes, magic: int, ndim: int, path) -> tuple[tuple[int, ...], np.ndarray]:
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError(f"{path}: file too short for an IDX header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise DataFormatError(f"{path}: magic {got} != expected {magic}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    payload = raw[header:]
    if len(payload) != size:
        raise DataFormatError(f"{path}: payload has {len(payload)} bytes, header promises {size}")
    return dims, np.frombuffer(payload, dtype=np.uint8)


def load_idx(image_path, label_path) -> tuple[np.ndarray, np.ndarray]:
    """Read an IDX image/label pair (optionally gzipped).

    Images are flattened row-major to ``rows * cols`` features and scaled to
    [0, 1] by 1/255. Labels come back as int64.
    """
    (count, rows, cols), pixels = _parse_idx(_read_bytes(image_path), IDX_IMAGES_MAGIC, 3, image_path)
    (n_labels,), labels = _parse_idx(_read_bytes(label_path), IDX_LABELS_MAGIC, 1, label_path)
    if n_labels != count:
        raise DataFormatError(f"{count} images but {n_labels} labels")
    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return images, labels.astype(np.int64)


def write_idx(image_path, label_path, images: np.ndarray, labels: np.ndarray) -> None:
    """Write ``(count, rows, cols)`` uint8 images and their labels as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(image_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())
    with open(label_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """CSV with a header row, one sample per row, integer label in the last column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        body = [row for row in reader if row]
    if not body:
        raise DataFormatError(f"{path}: no data rows")
    width = len(header)
    for lineno, row in enumerate(body, start=2):
        if len(row) != width:
            raise DataFormatError(f"{path}:{lineno}: {len(row)} fields, header has {width}")
    table = np.array(body, dtype=np.float64)
    return table[:, :-1], table[:, -1].astype(np.int64)


def _shards(rows, labels, groups) -> list[Shard]:
    rows = np.asarray(rows)
    labels = np.asarray(labels)
    return [Shard(rows[g], labels[g], g) for g in groups]


def split_iid(rows, labels, n: int, seed: int) -> list[Shard]:
    """Uniformly random equal partition; leftover rows go one each to the first nodes."""
    total = len(rows)
    if len(labels) != total:
        raise ValueError("rows and labels differ in length")
    if not 1 <= n <= total:
        raise ValueError(f"cannot split {total} rows across {n} nodes")
    perm = stream(seed, "split").permutation(total)
    return _shards(rows, labels, np.array_split(perm, n))


def split_noniid(rows, labels, n: int, seed: int) -> list[Shard]:
    """Label-sorted 2n-shard partition, two shards per node.

    Rows are stably sorted by label and cut into ``2n`` contiguous
    near-equal shards (a shard may straddle a label boundary); a seeded
    random permutation of shard ids assigns shards ``2i`` and ``2i+1`` to
    node ``i``.
    """
    total = len(rows)
    if len(labels) != total:
        raise ValueError("rows and labels differ in length")
    if n < 1 or total < 2 * n:
        raise ValueError(f"need at least {2 * n} rows for {2 * n} shards, got {total}")
    order = np.argsort(np.asarray(labels), kind="stable")
    pieces = np.array_split(order, 2 * n)
    perm = stream(seed, "split").permutation(2 * n)
    groups = [np.sort(np.concatenate([pieces[perm[2 * i]], pieces[perm[2 * i + 1]]])) for i in range(n)]
    return _shards(rows, labels, groups)


def synth_gaussian_mixture(
    n_rows: int, d: int, n_components: int, separation: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic unit-variance Gaussian blobs centred at ``separation * u_c`` for random unit ``u_c``."""
    if n_rows < 1 or d < 1 or n_components < 1 or separation < 0:
        raise ValueError("n_rows, d, n_components must be positive and separation non-negative")
    rng = stream(seed, "synth.mixture")
    dirs = rng.standard_normal((n_components, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    labels = rng.integers(0, n_components, size=n_rows)
    rows = separation * dirs[labels] + rng.standard_normal((n_rows, d))
    return rows, labels.astype(np.int64)


def synth_case_study_targets(n: int, d: int, seed: int) -> np.ndarray:
    """Local optima ``e_i ~ N(0, I_d)`` for the quadratic case study, shape ``(n, d)``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return stream(seed, "synth.targets").standard_normal((n, d))
