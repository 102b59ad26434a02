import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrmean.analytics import correlation_summary, mse_spatial, mse_temporal, optimal_t
from corrmean.core import ServerMemory, SparseMessage, TFunction, hit_counts
from corrmean.estimate import Decoder, decode_rand_k_temporal
from corrmean.oracle import enumerate_exact, random_k_masks
from corrmean.sparsify import top_k_encode, wangni_probabilities

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def node_vectors(draw, max_n=6, max_d=6):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    return draw(arrays(np.float64, (n, d), elements=finite))


@st.composite
def small_instance(draw):
    n = draw(st.integers(1, 3))
    d = draw(st.integers(1, 3))
    k = draw(st.integers(1, d))
    X = draw(arrays(np.float64, (n, d), elements=st.floats(-10, 10, allow_nan=False)))
    return X, k


@given(node_vectors())
def test_rho_in_feasible_range(X):
    s = correlation_summary(X)
    assume(s.rho is not None)
    assert -1.0 <= s.rho <= X.shape[0] - 1


@given(node_vectors(), st.randoms(use_true_random=False))
def test_summary_invariant_to_node_order(X, rnd):
    order = list(range(X.shape[0]))
    rnd.shuffle(order)
    assert correlation_summary(X) == correlation_summary(X[order])


@given(st.integers(1, 8), st.integers(1, 12), st.data())
def test_hit_counts_conserve_budget(n, d, data):
    k = data.draw(st.integers(1, d))
    masks = random_k_masks(np.random.default_rng(data.draw(st.integers(0, 2**32))), (n,), d, k)
    msgs = [SparseMessage(d, np.flatnonzero(m), np.ones(k)) for m in masks]
    counts = hit_counts(msgs).counts
    assert counts.sum() == n * k
    assert counts.min() >= 0 and counts.max() <= n


@given(st.integers(2, 30), st.floats(-1.0, 1.0, exclude_min=True))
def test_optimal_t_positive_off_the_degenerate_point(n, frac):
    rho = frac * (n - 1) if frac > 0 else frac
    t = optimal_t(rho, n)
    assert np.all(t.table()[1:] > 0)


@given(st.integers(1, 30))
def test_named_family_positive(n):
    for kind in ("rand_k", "spatial_max", "spatial_avg"):
        assert np.all(TFunction(kind, n).table()[1:] > 0)


@given(small_instance(), st.sampled_from(["rand_k", "spatial_max", "spatial_avg", "spatial_opt"]))
def test_spatial_family_unbiased_and_formula_exact(inst, kind):
    X, k = inst
    s = correlation_summary(X)
    assume(s.rho is not None)
    n = X.shape[0]
    t = optimal_t(s.rho, n) if kind == "spatial_opt" else TFunction(kind, n)
    res = enumerate_exact(X, k, Decoder("spatial", t=t))
    scale = max(1.0, float(np.abs(X).max()))
    assert np.max(np.abs(res.bias)) <= 1e-12 * scale
    assert math.isclose(mse_spatial(X, k, t), res.mse, rel_tol=1e-9, abs_tol=1e-12 * scale**2)


@given(small_instance(), st.data())
def test_temporal_unbiased_and_formula_exact(inst, data):
    X, k = inst
    B = data.draw(arrays(np.float64, X.shape, elements=st.floats(-10, 10, allow_nan=False)))
    mem = ServerMemory("per_node", B)
    res = enumerate_exact(X, k, Decoder("temporal", memory=mem))
    scale = max(1.0, float(np.abs(X).max()), float(np.abs(B).max()))
    assert np.max(np.abs(res.bias)) <= 1e-12 * scale
    assert math.isclose(mse_temporal(X, mem, k), res.mse, rel_tol=1e-9, abs_tol=1e-12 * scale**2)


@given(node_vectors(max_n=4, max_d=8), st.integers(0, 2**32))
def test_temporal_with_perfect_memory_is_exact(X, seed):
    n, d = X.shape
    k = 1 + seed % d
    masks = random_k_masks(np.random.default_rng(seed), (n,), d, k)
    msgs = [SparseMessage(d, np.flatnonzero(m), X[i, m]) for i, m in enumerate(masks)]
    est = decode_rand_k_temporal(msgs, k, ServerMemory("per_node", X))
    np.testing.assert_allclose(est, X.mean(axis=0), rtol=1e-12, atol=1e-9)


@given(arrays(np.float64, st.integers(1, 12), elements=finite), st.data())
def test_wangni_probabilities_water_fill(x, data):
    k = data.draw(st.integers(1, x.size))
    p = wangni_probabilities(x, k)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(p[x == 0] == 0)
    assert math.isclose(p.sum(), min(k, np.count_nonzero(x)), rel_tol=1e-9, abs_tol=1e-12)


@given(arrays(np.float64, st.integers(1, 12), elements=finite), st.data())
def test_top_k_keeps_largest(x, data):
    k = data.draw(st.integers(1, x.size))
    m = top_k_encode(x, k)
    kept = np.abs(m.values)
    dropped = np.abs(np.delete(x, m.indices))
    assert m.nnz == k
    assert dropped.size == 0 or kept.min() >= dropped.max()


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_floats_round_trip(v):
    assert float(repr(v)) == v
