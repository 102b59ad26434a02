"""Command-line front end: ``corrmean verify | task | sweep``.

All CSV output uses ``repr`` of Python floats (shortest round-trip form,
always a ``.`` decimal point) and fixed column order, so files are
locale-independent and byte-stable for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytics
from .core import CorrMeanError, ServerMemory, TFunction
from .estimate import Decoder, beta_bar
from .oracle import encoder_expectation, enumerate_exact, monte_carlo, pattern_count
from .rng import derive_seed, resolve_threads, stream
from .sparsify import EncoderSpec
from .tasks import ConfigError, TaskConfig, r2r1_sweep, run_task

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

VERIFY_GRID = ((1, 2, 1), (2, 2, 1), (2, 3, 1), (3, 4, 2), (2, 4, 2))
VERIFY_SEEDS = (0, 1, 2, 3, 4)
REL_TOL = 1e-9
BIAS_TOL = 1e-12
ZERO_FLOOR = 1e-12  # both sides below this count as equal zeros
MC_TRIALS = 20000
MC_SIGMAS = 4.0
PERTURBATIONS = 100
U64_MAX = 2**64 - 1


# ---------------------------------------------------------------- verify


@dataclass
class Check:
    """Outcome of one verification group: how many instances passed and which failed."""

    name: str
    passed: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, instance: str) -> None:
        if ok:
            self.passed += 1
        else:
            self.failures.append(instance)

    @property
    def ok(self) -> bool:
        return not self.failures


def _fmt_t(t: TFunction) -> str:
    if t.kind == "spatial_opt":
        return f"spatial_opt(rho={t.rho!r})"
    if t.kind == "custom":
        return "custom(" + ",".join(f"{v:.4g}" for v in t.values) + ")"
    return t.kind


def _close(a: float, b: float) -> bool:
    if abs(a) <= ZERO_FLOOR and abs(b) <= ZERO_FLOOR:
        return True
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b))


def verify_vectors(n: int, d: int, seed: int) -> np.ndarray:
    return stream(seed, f"verify.vectors.{n}.{d}").standard_normal((n, d))


def verify_memory(n: int, d: int, seed: int, mode: str) -> ServerMemory:
    g = stream(seed, f"verify.memory.{n}.{d}")
    if mode == "per_node":
        return ServerMemory("per_node", g.standard_normal((n, d)))
    return ServerMemory("shared", g.standard_normal(d))


def _grid_cases(X: np.ndarray, n: int, d: int, seed: int):
    """``(label, decoder, analytic mse)`` for every decoder checked on one instance."""
    k_cases = []
    rho = analytics.correlation_summary(X).rho
    t_fns = [TFunction("rand_k", n), TFunction("spatial_max", n), TFunction("spatial_avg", n)]
    if rho is not None:
        t_fns.append(analytics.optimal_t(rho, n))
    k_cases.append(("rand_k", Decoder("rand_k"), lambda k: analytics.mse_rand_k(X, k)))
    for t in t_fns:
        k_cases.append((f"spatial T={_fmt_t(t)}", Decoder("spatial", t=t), lambda k, t=t: analytics.mse_spatial(X, k, t)))
    for mode in ("per_node", "shared"):
        mem = verify_memory(n, d, seed, mode)
        k_cases.append(
            (f"temporal {mode}", Decoder("temporal", memory=mem), lambda k, mem=mem: analytics.mse_temporal(X, mem, k))
        )
    return k_cases


def _check_equivalence(check: Check, max_patterns: int, threads: int | None) -> None:
    for n, d, k in VERIFY_GRID:
        for seed in VERIFY_SEEDS:
            X = verify_vectors(n, d, seed)
            for label, dec, formula in _grid_cases(X, n, d, seed):
                where = f"n={n} d={d} k={k} {label} seed={seed}"
                analytic = formula(k)
                if pattern_count(n, d, k) <= max_patterns:
                    exact = enumerate_exact(X, k, dec, max_patterns=max_patterns)
                    bias = float(np.max(np.abs(exact.bias)))
                    ok = _close(analytic, exact.mse) and bias <= BIAS_TOL
                    check.record(ok, f"{where}: analytic={analytic!r} enumerated={exact.mse!r} max|bias|={bias:.3g}")
                else:
                    mc = monte_carlo(X, k, dec, MC_TRIALS, derive_seed(seed, f"verify.mc.{n}.{d}.{k}"), threads)
                    ok = abs(mc.mse - analytic) <= MC_SIGMAS * mc.stderr + ZERO_FLOOR
                    check.record(ok, f"{where}: analytic={analytic!r} monte_carlo={mc.mse!r} +- {mc.stderr:.3g}")


def random_perturbations(t_opt: TFunction, seed: int, count: int = PERTURBATIONS) -> list[TFunction]:
    """Positive T tables scattered around ``t_opt`` at several scales."""
    g = stream(seed, "verify.perturb")
    base = t_opt.table()[1:]
    out = []
    for j in range(count):
        scale = (0.01, 0.1, 1.0)[j % 3]
        z = g.standard_normal(base.size)
        vals = np.where(base > 0, base * np.exp(scale * z), scale * np.abs(z) + 1e-3)
        out.append(TFunction.from_table(vals))
    return out


def _check_optimality(check: Check) -> None:
    for n, d, k in VERIFY_GRID:
        for seed in VERIFY_SEEDS:
            X = verify_vectors(n, d, seed)
            rho = analytics.correlation_summary(X).rho
            t_opt = analytics.optimal_t(rho, n)
            best = analytics.mse_spatial(X, k, t_opt)
            for t in random_perturbations(t_opt, derive_seed(seed, f"{n}.{d}.{k}")):
                other = analytics.mse_spatial(X, k, t)
                check.record(
                    best <= other + 1e-12,
                    f"n={n} d={d} k={k} T={_fmt_t(t)} seed={seed}: optimal {best!r} > perturbed {other!r}",
                )


def _check_unbiased(check: Check) -> None:
    for n, d, k in VERIFY_GRID:
        for seed in VERIFY_SEEDS:
            X = verify_vectors(n, d, seed)
            kinds = ["rand_k", "wangni"] + (["induced"] if k >= 2 else [])
            for kind in kinds:
                for i, x in enumerate(X):
                    mean, _ = encoder_expectation(x, EncoderSpec(kind, k))
                    err = float(np.max(np.abs(mean - x)))
                    check.record(
                        err <= BIAS_TOL * max(1.0, float(np.max(np.abs(x)))),
                        f"n={n} d={d} k={k} encoder={kind} node={i} seed={seed}: max|E[x_hat]-x|={err:.3g}",
                    )


def _check_anchors(check: Check, max_patterns: int) -> None:
    for n, d, k in VERIFY_GRID + ((10, 100, 10), (15, 1000, 100)):
        b = beta_bar(TFunction("rand_k", n), Fraction(k, d))
        check.record(b == d / k, f"n={n} d={d} k={k} T=rand_k: beta_bar={b!r} != d/k={d / k!r}")
        for t in (TFunction("rand_k", n), TFunction.from_table([1.0] * n)):
            c1, c2 = analytics.c1_c2(t, Fraction(k, d))
            # one node: the c2 sum is empty (c2 = 1) and R2 = 0, so only c1 is pinned
            want_c2 = 0.0 if n >= 2 else 1.0
            check.record(
                abs(c1) <= 1e-12 and abs(c2 - want_c2) <= 1e-12,
                f"n={n} d={d} k={k} T={_fmt_t(t)}: c1={c1!r} c2={c2!r} (want 0, {want_c2})",
            )
    g = stream(0, "verify.rho")
    for j in range(1000):
        n = int(g.integers(1, 12))
        X = g.standard_normal((n, int(g.integers(1, 8)))) * np.exp(g.normal(0, 3))
        rho = analytics.correlation_summary(X).rho
        check.record(-1.0 <= rho <= n - 1, f"instance {j} n={n}: rho={rho!r} outside [-1, {n - 1}]")
    for n in range(1, 9):
        X = np.tile(stream(n, "verify.identical").standard_normal(5), (n, 1))
        rho = analytics.correlation_summary(X).rho
        check.record(rho == n - 1, f"identical vectors n={n}: rho={rho!r} != {n - 1}")
    for n, d, k in ((2, 3, 1), (2, 4, 2), (4, 3, 1)):
        v = stream(n, "verify.antipodal").standard_normal(d)
        X = np.array([v if i % 2 == 0 else -v for i in range(n)])
        t = analytics.optimal_t(-1.0, n)
        formula = analytics.mse_spatial(X, k, t)
        check.record(formula == 0.0, f"n={n} d={d} k={k} T={_fmt_t(t)} rho=-1: formula MSE {formula!r} != 0")
        if pattern_count(n, d, k) <= max_patterns:
            exact = enumerate_exact(X, k, Decoder("spatial", t=t), max_patterns=max_patterns)
            check.record(exact.mse == 0.0, f"n={n} d={d} k={k} T={_fmt_t(t)} rho=-1: enumerated MSE {exact.mse!r} != 0")


def run_verification(max_patterns: int = 10**7, threads: int | None = None) -> list[Check]:
    """Run every verification group and return their outcomes."""
    checks = [
        (Check("analytic MSE == oracle (rand_k, spatial x4, temporal x2)"), lambda c: _check_equivalence(c, max_patterns, threads)),
        (Check("optimal T beats 100 random positive T"), _check_optimality),
        (Check("rand_k / wangni / induced encoders unbiased"), _check_unbiased),
        (Check("closed-form anchors"), lambda c: _check_anchors(c, max_patterns)),
    ]
    for check, run in checks:
        run(check)
    return [c for c, _ in checks]


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    checks = run_verification(args.grid_max_patterns, args.threads)
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "PASS" if c.ok else "FAIL"
        print(f"{status}  {c.name:<{width}}  {c.passed}/{c.passed + len(c.failures)}")
    failures = [(c.name, f) for c in checks for f in c.failures]
    for name, f in failures:
        print(f"  failed [{name}] {f}")
    print(f"{'all checks passed' if not failures else f'{len(failures)} failing instance(s)'} "
          f"in {time.perf_counter() - t0:.1f}s")
    return 0 if not failures else 1


# ---------------------------------------------------------------- task


def _num(v) -> str:
    return repr(float(v))


def load_config(path) -> TaskConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return TaskConfig.from_dict(raw)


def metrics_csv(metrics, envelope=None) -> str:
    extra_keys = sorted(metrics[0].extra) if metrics else []
    header = ["round", "task_loss", "est_mse", "r2_over_r1", *extra_keys]
    if envelope is not None:
        header.append("bound_envelope")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for j, m in enumerate(metrics):
        row = [str(m.round), _num(m.task_loss), _num(m.est_mse), _num(m.r2_over_r1)]
        row += [_num(m.extra[key]) for key in extra_keys]
        if envelope is not None:
            row.append(_num(envelope[j]))
        w.writerow(row)
    return buf.getvalue()


def cmd_task(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    metrics, envelope = run_task(cfg, args.threads)
    Path(args.out).write_text(metrics_csv(metrics, envelope), encoding="utf-8")
    last = metrics[-1]
    mean_mse = math.fsum(m.est_mse for m in metrics) / len(metrics)
    print(
        f"{cfg.task} encoder={cfg.encoder} decoder={cfg.decoder} seed={cfg.seed}: {len(metrics)} rounds, "
        f"final task_loss={last.task_loss:.6g}, mean est_mse={mean_mse:.6g} -> {args.out}"
    )
    return 0


# ---------------------------------------------------------------- sweep


def sweep_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_index", "rho", "estimator", "mse_hat", "stderr"])
    for p in points:
        stderr = "unavailable" if math.isnan(p.stderr) else _num(p.stderr)
        w.writerow([str(p.config_index), _num(p.rho), p.estimator, _num(p.mse_hat), stderr])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    points = r2r1_sweep(args.n, args.d, args.k, args.trials, args.seed, args.threads, args.every)
    Path(args.out).write_text(sweep_csv(points), encoding="utf-8")
    configs = len({p.config_index for p in points})
    print(f"sweep n={args.n} d={args.d} k={args.k}: {configs} configurations x {args.trials} trials -> {args.out}")
    return 0


# ---------------------------------------------------------------- entry point


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrmean", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    threads_help = "worker threads (default: $CORRMEAN_THREADS or 1); never changes output"

    v = sub.add_parser("verify", help="check analytic formulas against the exhaustive oracle")
    v.add_argument("--grid-max-patterns", type=_positive, default=10**7,
                   help="instances with more sampling patterns fall back to Monte Carlo")
    v.add_argument("--threads", type=_positive, default=None, help=threads_help)

    t = sub.add_parser("task", help="run one experiment from a TOML config")
    t.add_argument("--config", required=True, help="TOML experiment config")
    t.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    t.add_argument("--out", required=True, help="CSV file to write")
    t.add_argument("--threads", type=_positive, default=None, help=threads_help)

    s = sub.add_parser("sweep", help="Monte Carlo MSE along the R2/R1 sign-flip sweep")
    s.add_argument("--n", type=_positive, required=True, help="number of nodes (even)")
    s.add_argument("--d", type=_positive, required=True, help="vector dimension")
    s.add_argument("--k", type=_positive, required=True, help="coordinates sent per node")
    s.add_argument("--trials", type=_positive, required=True, help="Monte Carlo trials per configuration")
    s.add_argument("--seed", type=_u64, default=0)
    s.add_argument("--out", required=True, help="CSV file to write")
    s.add_argument("--every", type=_positive, default=1, help="keep every N-th configuration (last always kept)")
    s.add_argument("--threads", type=_positive, default=None, help=threads_help)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep":
        if args.n % 2:
            parser.error(f"--n must be even, got {args.n}")
        if args.k > args.d:
            parser.error(f"--k ({args.k}) cannot exceed --d ({args.d})")
    try:
        args.threads = resolve_threads(args.threads)
    except ValueError as exc:
        parser.error(str(exc))
    handler = {"verify": cmd_verify, "task": cmd_task, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except (CorrMeanError, OSError) as exc:
        print(f"corrmean {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
