"""Desk-scale distributed experiments built on the encoders and decoders.

Each simulation runs one encode/decode exchange per round and records a
:class:`~corrmean.core.RoundMetrics`. Node ``i`` in round ``t`` samples from
the stream ``"round.<t>.node.<i>"`` (with a ``.cluster.<c>`` suffix for
K-means), so different decoders run with the same seed see the same Rand-k
patterns.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .analytics import correlation_summary, eta_bound, optimal_t
from .core import CorrMeanError, RoundMetrics, ServerMemory, TFunction
from .data import load_csv, load_idx, split_iid, split_noniid, synth_case_study_targets, synth_gaussian_mixture
from .estimate import (
    Decoder,
    decode_prescaled,
    decode_rand_k,
    decode_rand_k_spatial,
    decode_rand_k_temporal,
    memory_update_per_node,
    memory_update_shared,
)
from .oracle import monte_carlo
from .rng import derive_seed, ordered_map, stream
from .sparsify import ENCODER_KINDS, EncoderSpec

log = logging.getLogger(__name__)

TASKS = ("power_iteration", "kmeans", "logreg", "quadratic")
DECODERS = ("rand_k", "spatial_max", "spatial_avg", "spatial_opt", "temporal", "temporal_shared", "prescaled")
DATASETS = ("gaussian_mixture", "idx", "csv", "case_study")


class ConfigError(CorrMeanError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class TaskDivergedError(CorrMeanError, RuntimeError):
    """Training blew up; the message names the knob to turn."""


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "gaussian_mixture"
    rows: int = 5000
    d: int = 64
    components: int = 4
    separation: float = 4.0
    center: bool = True
    images: str | None = None
    labels: str | None = None
    path: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    test_path: str | None = None
    test_rows: int = 0


@dataclass(frozen=True)
class TaskConfig:
    """Everything needed to reproduce one run, given the seed.

    ``k`` is the per-node budget; ``k_fraction`` may be given instead and is
    resolved against the model dimension as ``round(k_fraction * d)``.
    ``lr`` of ``None`` means the task default (0.01 for logistic regression,
    the provable step-size bound for the quadratic case study).
    """

    task: str
    n: int
    k: int | None = None
    k_fraction: float | None = None
    encoder: str = "rand_k"
    decoder: str = "rand_k"
    rounds: int = 100
    seed: int = 0
    lr: float | None = None
    batch_size: int = 512
    clusters: int = 10
    induced_top_fraction: float = 0.5
    node_normalize: bool = False
    split: str = "iid"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if (self.k is None) == (self.k_fraction is None):
            raise ConfigError("give exactly one of k and k_fraction")
        if self.k_fraction is not None and not 0 < self.k_fraction <= 1:
            raise ConfigError("k_fraction must lie in (0, 1]")
        if self.lr is not None and self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.encoder not in ENCODER_KINDS:
            raise ConfigError(f"unknown encoder {self.encoder!r}; expected one of {ENCODER_KINDS}")
        if self.decoder not in DECODERS:
            raise ConfigError(f"unknown decoder {self.decoder!r}; expected one of {DECODERS}")
        if self.decoder == "prescaled":
            if self.encoder == "rand_k":
                raise ConfigError("rand_k encoder sends raw values; pair it with a Rand-k decoder, not 'prescaled'")
        elif self.encoder != "rand_k":
            raise ConfigError(f"decoder {self.decoder!r} requires the rand_k encoder, got {self.encoder!r}")
        if self.split not in ("iid", "noniid"):
            raise ConfigError(f"unknown split {self.split!r}")
        if self.dataset.kind not in DATASETS:
            raise ConfigError(f"unknown dataset kind {self.dataset.kind!r}; expected one of {DATASETS}")
        if self.batch_size < 1 or self.clusters < 1:
            raise ConfigError("batch_size and clusters must be positive")

    def budget(self, d: int) -> int:
        k = self.k if self.k is not None else int(math.floor(self.k_fraction * d + 0.5))
        if not 1 <= k <= d:
            raise ConfigError(f"budget k={k} outside [1, {d}]")
        return k

    def encoder_spec(self, d: int) -> EncoderSpec:
        return EncoderSpec(self.encoder, self.budget(d), self.induced_top_fraction)

    def replace(self, **changes) -> "TaskConfig":
        ds = changes.pop("dataset", None)
        if isinstance(ds, dict):
            ds = dataclasses.replace(self.dataset, **ds)
        if ds is not None:
            changes["dataset"] = ds
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TaskConfig":
        """Build from parsed TOML; unknown keys anywhere are an error."""
        raw = dict(raw)
        _reject_unknown(raw, {f.name for f in dataclasses.fields(cls)}, "config")
        ds = raw.pop("dataset", {})
        if not isinstance(ds, dict):
            raise ConfigError("[dataset] must be a table")
        _reject_unknown(ds, {f.name for f in dataclasses.fields(DatasetSpec)}, "[dataset]")
        try:
            return cls(dataset=DatasetSpec(**ds), **raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _reject_unknown(raw: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def desk_config(task: str, **overrides) -> TaskConfig:
    """Small defaults that run in seconds; full-size runs only change the config."""
    base = {
        "power_iteration": dict(
            n=50, k_fraction=0.1, rounds=40, dataset=DatasetSpec(rows=5000, d=64, components=4, separation=4.0)
        ),
        "kmeans": dict(
            n=50,
            k_fraction=0.1,
            rounds=20,
            clusters=4,
            dataset=DatasetSpec(rows=5000, d=64, components=4, separation=4.0, center=False),
        ),
        "logreg": dict(
            n=50,
            k_fraction=0.1,
            rounds=100,
            lr=0.05,
            batch_size=64,
            split="noniid",
            # 16 features x 4 classes: a 64-dim gradient per node
            dataset=DatasetSpec(rows=5000, d=16, components=4, separation=3.0, center=False),
        ),
        "quadratic": dict(n=15, k=100, rounds=500, dataset=DatasetSpec(kind="case_study", d=1000)),
    }[task]
    cfg = TaskConfig(task=task, **base)
    return cfg.replace(**overrides) if overrides else cfg


class Aggregator:
    """One mean-estimation channel: node encoders, the server decoder and its memory.

    ``weights`` in :meth:`step` multiplies node ``i``'s vector by ``weights[i]``
    on the server side (message values and its fill-in vector alike); the
    channel then estimates ``mean_i(weights[i] * X[i])``. Memory always holds
    unweighted values.
    """

    def __init__(self, cfg: TaskConfig, n: int, d: int, label: str = ""):
        self.encoder = cfg.encoder_spec(d)
        self.decoder = cfg.decoder
        self.seed = cfg.seed
        self.n, self.d, self.k = n, d, self.encoder.k
        self.label = label
        self.memory = None
        if self.decoder == "temporal":
            self.memory = ServerMemory.zeros_per_node(n, d)
        elif self.decoder == "temporal_shared":
            self.memory = ServerMemory.zeros_shared(d)

    def encode(self, X: np.ndarray, t: int, threads: int | None = None):
        def one(i):
            return self.encoder.encode(X[i], stream(self.seed, f"round.{t}.node.{i}{self.label}"))

        return ordered_map(one, range(self.n), threads)

    def step(self, X: np.ndarray, t: int, weights: np.ndarray | None = None, threads: int | None = None) -> np.ndarray:
        messages = self.encode(X, t, threads)
        if weights is None:
            wire, effective = messages, X
        else:
            wire = [m.scaled(w) for m, w in zip(messages, weights)]
            effective = X * weights[:, None]
        kind, k = self.decoder, self.k
        if kind == "rand_k":
            est = decode_rand_k(wire, k)
        elif kind.startswith("spatial"):
            if kind == "spatial_opt":
                rho = correlation_summary(effective).rho
                t_fn = optimal_t(rho, self.n) if rho is not None else None
            else:
                t_fn = TFunction(kind, self.n)
            est = decode_rand_k(wire, k) if t_fn is None else decode_rand_k_spatial(wire, k, t_fn)
        elif kind.startswith("temporal"):
            mem = self.memory
            if weights is not None:
                mem = ServerMemory("per_node", mem.as_matrix(self.n) * weights[:, None])
            est = decode_rand_k_temporal(wire, k, mem)
            if kind == "temporal":
                self.memory = memory_update_per_node(self.memory, messages)
            else:
                self.memory = memory_update_shared(self.memory, est)
        else:
            est = decode_prescaled(wire)
        return est


def _rho(X: np.ndarray) -> float:
    rho = correlation_summary(X).rho
    return math.nan if rho is None else rho


def _sq(v: np.ndarray) -> float:
    return float(v @ v)


def load_task_data(cfg: TaskConfig):
    """``(rows, labels, test)`` for the configured dataset; ``test`` may be None."""
    ds = cfg.dataset
    test = None
    if ds.kind == "gaussian_mixture":
        rows, labels = synth_gaussian_mixture(ds.rows + ds.test_rows, ds.d, ds.components, ds.separation, cfg.seed)
        if ds.test_rows:
            test = (rows[ds.rows :], labels[ds.rows :])
            rows, labels = rows[: ds.rows], labels[: ds.rows]
    elif ds.kind == "idx":
        if not ds.images or not ds.labels:
            raise ConfigError("idx dataset needs images and labels paths")
        rows, labels = load_idx(ds.images, ds.labels)
        if ds.test_images and ds.test_labels:
            test = load_idx(ds.test_images, ds.test_labels)
    elif ds.kind == "csv":
        if not ds.path:
            raise ConfigError("csv dataset needs a path")
        rows, labels = load_csv(ds.path)
        if ds.test_path:
            test = load_csv(ds.test_path)
    else:
        raise ConfigError(f"task {cfg.task!r} needs a row dataset, not {ds.kind!r}")
    return rows, labels, test


def _partition(cfg: TaskConfig, rows, labels):
    splitter = split_iid if cfg.split == "iid" else split_noniid
    return splitter(rows, labels, cfg.n, cfg.seed)


# ---------------------------------------------------------------- power iteration


def _power_setup(cfg: TaskConfig):
    rows, labels, _ = load_task_data(cfg)
    if cfg.dataset.center:
        rows = rows - rows.mean(axis=0)
    shards = _partition(cfg, rows, labels)
    covs = np.stack([s.rows.T @ s.rows / len(s.rows) for s in shards])
    global_cov = covs.sum(axis=0) / cfg.n
    _, vecs = np.linalg.eigh(global_cov)
    v0 = stream(cfg.seed, "init").uniform(0.0, 1.0, rows.shape[1])
    return covs, vecs[:, -1], v0 / np.linalg.norm(v0)


def _power_updates(covs: np.ndarray, v: np.ndarray, normalize: bool) -> np.ndarray:
    U = covs @ v
    if normalize:
        U = U / np.linalg.norm(U, axis=1, keepdims=True)
    return U


def power_iteration_sim(cfg: TaskConfig, threads: int | None = None) -> list[RoundMetrics]:
    """Distributed power iteration for the top eigenvector of the average local covariance.

    Each node sends ``C_i v``; the server averages, normalises and broadcasts.
    ``task_loss`` is ``1 - <v, v*>^2``.
    """
    covs, v_star, v = _power_setup(cfg)
    n, d = cfg.n, v.size
    agg = Aggregator(cfg, n, d)
    out = []
    for t in range(1, cfg.rounds + 1):
        U = _power_updates(covs, v, cfg.node_normalize)
        u_bar = U.sum(axis=0) / n
        u_hat = agg.step(U, t, threads=threads)
        extra = {}
        norm = np.linalg.norm(u_hat)
        if norm == 0.0:
            log.warning("round %d: mean estimate is zero; re-drawing the eigenvector estimate", t)
            v = stream(cfg.seed, f"round.{t}.reinit").uniform(0.0, 1.0, d)
            v /= np.linalg.norm(v)
            extra["degenerate"] = 1.0
        else:
            v = u_hat / norm
        out.append(RoundMetrics(t, 1.0 - float(v @ v_star) ** 2, _sq(u_hat - u_bar), _rho(U), extra))
    return out


def power_iteration_reference(cfg: TaskConfig) -> list[float]:
    """Uncompressed power iteration; per-round ``1 - <v, v*>^2``."""
    covs, v_star, v = _power_setup(cfg)
    losses = []
    for _ in range(cfg.rounds):
        u = _power_updates(covs, v, cfg.node_normalize).sum(axis=0) / cfg.n
        v = u / np.linalg.norm(u)
        losses.append(1.0 - float(v @ v_star) ** 2)
    return losses


# ---------------------------------------------------------------- K-means


def _sq_dists(A: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((A[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_loss(rows: np.ndarray, centers: np.ndarray) -> float:
    return float(_sq_dists(rows, centers).min(axis=1).mean())


def _local_centers(A: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster local means (current centre where empty) and point counts."""
    assign = _sq_dists(A, centers).argmin(axis=1)
    K = centers.shape[0]
    counts = np.bincount(assign, minlength=K).astype(np.float64)
    means = centers.copy()
    for c in range(K):
        if counts[c]:
            means[c] = A[assign == c].mean(axis=0)
    return means, counts


def _kmeans_setup(cfg: TaskConfig):
    rows, labels, _ = load_task_data(cfg)
    shards = _partition(cfg, rows, labels)
    if cfg.clusters > len(rows):
        raise ConfigError("more clusters than data points")
    pick = stream(cfg.seed, "init").choice(len(rows), size=cfg.clusters, replace=False)
    return rows, [s.rows for s in shards], rows[np.sort(pick)].copy()


def kmeans_sim(cfg: TaskConfig, threads: int | None = None) -> list[RoundMetrics]:
    """Lloyd's algorithm with compressed per-node centre updates.

    Node ``i`` sends its local mean for each cluster; the server combines them
    with the exact local counts as weights. ``est_mse`` and ``r2_over_r1`` are
    averaged over clusters that received points this round.
    """
    rows, local, centers = _kmeans_setup(cfg)
    n, d, K = cfg.n, rows.shape[1], cfg.clusters
    aggs = [Aggregator(cfg, n, d, label=f".cluster.{c}") for c in range(K)]
    out = []
    for t in range(1, cfg.rounds + 1):
        stats = [_local_centers(A, centers) for A in local]
        means = np.stack([s[0] for s in stats])  # (n, K, d)
        counts = np.stack([s[1] for s in stats])  # (n, K)
        new = centers.copy()
        errs, rhos = [], []
        for c in range(K):
            total = counts[:, c].sum()
            if total == 0:
                continue
            weights = n * counts[:, c] / total
            X = means[:, c, :]
            effective = X * weights[:, None]
            target = effective.sum(axis=0) / n
            new[c] = aggs[c].step(X, t, weights=weights, threads=threads)
            errs.append(_sq(new[c] - target))
            r = _rho(effective)
            if not math.isnan(r):
                rhos.append(r)
        centers = new
        est = float(np.mean(errs)) if errs else 0.0
        rho = float(np.mean(rhos)) if rhos else math.nan
        out.append(RoundMetrics(t, _kmeans_loss(rows, centers), est, rho))
    return out


def kmeans_reference(cfg: TaskConfig) -> list[float]:
    """Uncompressed distributed Lloyd iterations; per-round average squared distance."""
    rows, local, centers = _kmeans_setup(cfg)
    n = cfg.n
    losses = []
    for _ in range(cfg.rounds):
        stats = [_local_centers(A, centers) for A in local]
        means = np.stack([s[0] for s in stats])
        counts = np.stack([s[1] for s in stats])
        new = centers.copy()
        for c in range(cfg.clusters):
            total = counts[:, c].sum()
            if total:
                weights = n * counts[:, c] / total
                new[c] = (means[:, c, :] * weights[:, None]).sum(axis=0) / n
        centers = new
        losses.append(_kmeans_loss(rows, centers))
    return losses


# ---------------------------------------------------------------- logistic regression


def _log_softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))


def softmax_xent(W: np.ndarray, A: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of a linear softmax classifier."""
    return float(-_log_softmax(A @ W)[np.arange(len(y)), y].mean())


def softmax_xent_grad(W: np.ndarray, A: np.ndarray, y: np.ndarray) -> np.ndarray:
    P = np.exp(_log_softmax(A @ W))
    P[np.arange(len(y)), y] -= 1.0
    return A.T @ P / len(y)


def _logreg_setup(cfg: TaskConfig):
    rows, labels, test = load_task_data(cfg)
    classes = int(max(labels.max(), test[1].max() if test is not None else 0)) + 1
    shards = _partition(cfg, rows, labels)
    return rows, labels, test, shards, classes


def _logreg_batches(cfg: TaskConfig, shards, t: int):
    out = []
    for i, s in enumerate(shards):
        size = min(cfg.batch_size, len(s.rows))
        idx = stream(cfg.seed, f"round.{t}.batch.{i}").choice(len(s.rows), size=size, replace=False)
        out.append((s.rows[idx], s.labels[idx]))
    return out


def logreg_sim(cfg: TaskConfig, threads: int | None = None) -> list[RoundMetrics]:
    """Softmax regression trained by compressed distributed mini-batch gradient descent.

    ``task_loss`` is the full training cross-entropy after the round's update;
    ``extra["test_acc"]`` is reported when a test split exists.
    """
    rows, labels, test, shards, classes = _logreg_setup(cfg)
    F = rows.shape[1]
    d = F * classes
    lr = 0.01 if cfg.lr is None else cfg.lr
    W = np.zeros((F, classes))
    initial = softmax_xent(W, rows, labels)
    agg = Aggregator(cfg, cfg.n, d)
    out = []
    for t in range(1, cfg.rounds + 1):
        G = np.stack([softmax_xent_grad(W, A, y).ravel() for A, y in _logreg_batches(cfg, shards, t)])
        g_bar = G.sum(axis=0) / cfg.n
        g_hat = agg.step(G, t, threads=threads)
        W = W - lr * g_hat.reshape(F, classes)
        loss = softmax_xent(W, rows, labels)
        if not math.isfinite(loss) or loss > 1e3 * initial:
            raise TaskDivergedError(
                f"round {t}: training loss {loss:.4g} exceeds 1000x the initial {initial:.4g}; "
                f"lower lr (now {lr}) or raise k"
            )
        extra = {}
        if test is not None:
            extra["test_acc"] = float(((test[0] @ W).argmax(axis=1) == test[1]).mean())
        out.append(RoundMetrics(t, loss, _sq(g_hat - g_bar), _rho(G), extra))
    return out


def logreg_reference(cfg: TaskConfig) -> list[float]:
    """Uncompressed distributed mini-batch GD with the same batches; per-round training loss."""
    rows, labels, _, shards, classes = _logreg_setup(cfg)
    F = rows.shape[1]
    lr = 0.01 if cfg.lr is None else cfg.lr
    W = np.zeros((F, classes))
    losses = []
    for t in range(1, cfg.rounds + 1):
        G = np.stack([softmax_xent_grad(W, A, y).ravel() for A, y in _logreg_batches(cfg, shards, t)])
        W = W - lr * (G.sum(axis=0) / cfg.n).reshape(F, classes)
        losses.append(softmax_xent(W, rows, labels))
    return losses


# ---------------------------------------------------------------- quadratic case study


def _quadratic_setup(cfg: TaskConfig):
    if cfg.dataset.kind != "case_study":
        raise ConfigError("the quadratic task needs dataset kind 'case_study'")
    d = cfg.dataset.d
    E = synth_case_study_targets(cfg.n, d, cfg.seed)
    # grad F(w) = w - mean(e_i), so the minimiser is the plain average of the targets
    w_star = E.sum(axis=0) / cfg.n
    k = cfg.budget(d)
    bound = eta_bound(cfg.n, d, k)
    eta = bound if cfg.lr is None else cfg.lr
    w0 = np.zeros(d)
    G = _sq(w0 - w_star) + sum(_sq(w_star - e) for e in E) / cfg.n
    return E, w_star, w0, eta, bound, G


def quadratic_case_study(cfg: TaskConfig, threads: int | None = None) -> tuple[list[RoundMetrics], list[float]]:
    """Gradient descent on ``(1/2n) sum_i |w - e_i|^2`` with compressed gradients.

    Returns per-round metrics (``task_loss = |w_t - w*|^2``) and the envelope
    ``(1 - eta)^t * G`` that bounds its expectation for the temporal decoder
    when ``eta`` does not exceed :func:`~corrmean.analytics.eta_bound`.
    """
    E, w_star, w, eta, bound, G = _quadratic_setup(cfg)
    if eta > bound:
        warnings.warn(
            f"step size {eta} exceeds the convergence bound {bound:.4g}; the envelope is not guaranteed",
            stacklevel=2,
        )
    n = cfg.n
    agg = Aggregator(cfg, n, w.size)
    out, envelope = [], []
    for t in range(1, cfg.rounds + 1):
        X = w[None, :] - E
        x_bar = X.sum(axis=0) / n
        x_hat = agg.step(X, t, threads=threads)
        w = w - eta * x_hat
        out.append(RoundMetrics(t, _sq(w - w_star), _sq(x_hat - x_bar), _rho(X)))
        envelope.append((1.0 - eta) ** t * G)
    return out, envelope


def quadratic_reference(cfg: TaskConfig) -> list[float]:
    """Exact gradient descent; per-round ``|w_t - w*|^2``."""
    E, w_star, w, eta, _, _ = _quadratic_setup(cfg)
    out = []
    for _ in range(cfg.rounds):
        w = w - eta * ((w[None, :] - E).sum(axis=0) / cfg.n)
        out.append(_sq(w - w_star))
    return out


def run_task(cfg: TaskConfig, threads: int | None = None) -> tuple[list[RoundMetrics], list[float] | None]:
    """Dispatch on ``cfg.task``; the second element is the bound envelope (quadratic only)."""
    if cfg.task == "power_iteration":
        return power_iteration_sim(cfg, threads), None
    if cfg.task == "kmeans":
        return kmeans_sim(cfg, threads), None
    if cfg.task == "logreg":
        return logreg_sim(cfg, threads), None
    return quadratic_case_study(cfg, threads)


REFERENCES = {
    "power_iteration": power_iteration_reference,
    "kmeans": kmeans_reference,
    "logreg": logreg_reference,
    "quadratic": quadratic_reference,
}


# ---------------------------------------------------------------- R2/R1 sweep


class SweepPoint(NamedTuple):
    config_index: int
    rho: float
    estimator: str
    mse_hat: float
    stderr: float


SWEEP_ESTIMATORS = ("rand_k", "spatial_max", "spatial_avg", "spatial_opt")


def sweep_configurations(n: int, d: int):
    """Yield the node vectors of the sign-flip sweep, starting at rho = -1.

    Starts from n/2 copies of ``1/sqrt(d)`` and n/2 of ``-1/sqrt(d)``, then
    flips one entry of the negative half at a time (coordinate-major, node
    inner) until all vectors agree (rho = n - 1). Yields ``1 + d*n/2`` arrays.
    """
    if n < 2 or n % 2:
        raise ConfigError(f"the sweep needs an even n >= 2, got {n}")
    c = 1.0 / math.sqrt(d)
    X = np.full((n, d), c)
    X[n // 2 :] = -c
    yield X.copy()
    for j in range(d):
        for i in range(n // 2, n):
            X[i, j] = c
            yield X.copy()


def r2r1_sweep(
    n: int, d: int, k: int, trials: int, seed: int, threads: int | None = None, every: int = 1
) -> list[SweepPoint]:
    """Monte Carlo MSE of Rand-k and the spatial estimators along the sign-flip sweep.

    All four estimators share sampling patterns at each configuration. The
    optimal T uses the exact rho of the configuration. ``every`` keeps only
    every ``every``-th configuration (the last one is always kept).
    """
    configs = list(sweep_configurations(n, d))
    keep = sorted(set(range(0, len(configs), max(1, every))) | {len(configs) - 1})
    out = []
    for c in keep:
        X = configs[c]
        rho = correlation_summary(X).rho
        decoders = [
            Decoder("rand_k"),
            Decoder("spatial", t=TFunction("spatial_max", n)),
            Decoder("spatial", t=TFunction("spatial_avg", n)),
            Decoder("spatial", t=optimal_t(rho, n)),
        ]
        results = monte_carlo(X, k, decoders, trials, derive_seed(seed, f"sweep.{c}"), threads)
        for name, res in zip(SWEEP_ESTIMATORS, results):
            out.append(SweepPoint(c, rho, name, res.mse, res.stderr))
    return out
