import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from corrmean.core import BudgetError, MemoryModeError, ServerMemory, SparseMessage, TFunction
from corrmean.estimate import (
    Decoder,
    beta_bar,
    binom_pmf,
    decode_prescaled,
    decode_rand_k,
    decode_rand_k_spatial,
    decode_rand_k_temporal,
    memory_update_per_node,
    memory_update_shared,
)
from corrmean.oracle import enumerate_exact, random_k_masks
from corrmean.sparsify import rand_k_encode


def sparse(d, pairs):
    pairs = sorted(pairs)
    return SparseMessage(d, [i for i, _ in pairs], [v for _, v in pairs])


def random_messages(rng, X, k):
    return [rand_k_encode(x, k, rng) for x in X]


class TestBinomPmf:
    @pytest.mark.parametrize("trials,p", [(0, 0.3), (1, 0.5), (9, 0.1), (49, 0.1), (20000, 0.01), (7, 1.0)])
    def test_matches_scipy(self, trials, p):
        np.testing.assert_allclose(binom_pmf(trials, p), stats.binom.pmf(np.arange(trials + 1), trials, p), rtol=1e-10, atol=1e-300)

    def test_sums_to_one(self):
        assert math.isclose(math.fsum(binom_pmf(999, 0.37)), 1.0, rel_tol=1e-13)


class TestDecodeRandK:
    def test_hand_example(self):
        est = decode_rand_k([sparse(2, [(0, 4.0)]), sparse(2, [(1, 2.0)])], 1)
        np.testing.assert_array_equal(est, [4.0, 2.0])

    def test_full_budget_is_mean(self, rng):
        X = rng.standard_normal((3, 4))
        est = decode_rand_k([SparseMessage(4, range(4), x) for x in X], 4)
        np.testing.assert_allclose(est, X.mean(axis=0), rtol=1e-15)

    def test_single_node_two_outcomes(self):
        outs = [decode_rand_k([sparse(2, [(j, 1.0)])], 1) for j in (0, 1)]
        np.testing.assert_array_equal(outs[0], [2.0, 0.0])
        np.testing.assert_array_equal(outs[1], [0.0, 2.0])
        np.testing.assert_array_equal((outs[0] + outs[1]) / 2, [1.0, 1.0])

    def test_common_budget_required(self):
        with pytest.raises(BudgetError):
            decode_rand_k([sparse(3, [(0, 1.0)]), sparse(3, [(0, 1.0), (1, 1.0)])], 1)

    def test_empty_list(self):
        with pytest.raises(ValueError):
            decode_rand_k([], 1)


class TestDecodePrescaled:
    def test_single_full_message(self):
        np.testing.assert_array_equal(decode_prescaled([SparseMessage(3, [0, 1, 2], [1.0, 2.0, 3.0])]), [1, 2, 3])

    def test_disjoint_supports_halved(self):
        est = decode_prescaled([sparse(3, [(0, 4.0)]), sparse(3, [(2, 6.0)])])
        np.testing.assert_array_equal(est, [2.0, 0.0, 3.0])

    def test_all_empty(self):
        np.testing.assert_array_equal(decode_prescaled([SparseMessage(2, [], [])] * 3), [0.0, 0.0])


class TestBetaBar:
    @pytest.mark.parametrize("n,d,k", [(1, 2, 1), (7, 100, 10), (15, 1000, 100), (10, 3, 3)])
    def test_rand_k_is_d_over_k_exactly(self, n, d, k):
        assert beta_bar(TFunction("rand_k", n), Fraction(k, d)) == d / k

    def test_generic_path_for_constant_table(self):
        assert math.isclose(beta_bar(TFunction.from_table([1.0] * 6), Fraction(1, 10)), 10.0, rel_tol=1e-14)

    def test_hand_value(self):
        # 1/beta = 0.5 * (0.5/1 + 0.5/2) = 0.375
        assert math.isclose(beta_bar(TFunction("spatial_max", 2), 0.5), 8 / 3, rel_tol=1e-15)

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_degenerate_optimum(self, n):
        t = TFunction("spatial_opt", n, rho=-1.0)
        assert t.degenerate
        assert beta_bar(t, 0.3) == 0.0

    def test_zero_probability(self):
        with pytest.raises(ValueError):
            beta_bar(TFunction("spatial_max", 2), 0.0)


class TestDecodeSpatial:
    def test_constant_t_matches_rand_k(self, rng):
        X = rng.standard_normal((6, 20))
        for _ in range(20):
            msgs = random_messages(rng, X, 3)
            a = decode_rand_k_spatial(msgs, 3, TFunction("rand_k", 6))
            b = decode_rand_k(msgs, 3)
            assert np.max(np.abs(a - b)) <= 1e-15

    def test_hand_example(self):
        msgs = [sparse(2, [(0, 1.0)]), sparse(2, [(0, 3.0)])]
        est = decode_rand_k_spatial(msgs, 1, TFunction("spatial_max", 2))
        assert math.isclose(est[0], 8 / 3, rel_tol=1e-15)
        assert est[1] == 0.0

    def test_identical_vectors_unbiased(self):
        x = np.array([1.5, -0.5])
        res = enumerate_exact(np.array([x, x]), 1, Decoder("spatial", t=TFunction("spatial_max", 2)))
        assert np.max(np.abs(res.bias)) <= 1e-12

    def test_node_count_must_match(self):
        with pytest.raises(ValueError):
            decode_rand_k_spatial([sparse(2, [(0, 1.0)])], 1, TFunction("spatial_max", 2))

    def test_degenerate_decodes_to_zero(self):
        msgs = [sparse(2, [(0, 1.0)]), sparse(2, [(1, -1.0)])]
        np.testing.assert_array_equal(decode_rand_k_spatial(msgs, 1, TFunction("spatial_opt", 2, rho=-1.0)), [0, 0])


class TestDecodeTemporal:
    def test_zero_memory_is_rand_k_exactly(self, rng):
        X = rng.standard_normal((5, 30))
        for mem in (ServerMemory.zeros_per_node(5, 30), ServerMemory.zeros_shared(30)):
            for _ in range(20):
                msgs = random_messages(rng, X, 4)
                assert np.array_equal(decode_rand_k_temporal(msgs, 4, mem), decode_rand_k(msgs, 4))

    def test_perfect_memory_recovers_mean(self, rng):
        X = rng.standard_normal((4, 6))
        mem = ServerMemory("per_node", X)
        for _ in range(10):
            est = decode_rand_k_temporal(random_messages(rng, X, 2), 2, mem)
            np.testing.assert_allclose(est, X.mean(axis=0), atol=1e-15)

    def test_two_outcome_example(self):
        mem = ServerMemory("per_node", [[1.0, 0.0]])
        a = decode_rand_k_temporal([sparse(2, [(0, 1.0)])], 1, mem)
        b = decode_rand_k_temporal([sparse(2, [(1, 1.0)])], 1, mem)
        np.testing.assert_array_equal(a, [1.0, 0.0])
        np.testing.assert_array_equal(b, [1.0, 2.0])
        x = np.array([1.0, 1.0])
        assert (np.sum((a - x) ** 2) + np.sum((b - x) ** 2)) / 2 == 1.0

    def test_wrong_node_count(self):
        with pytest.raises(ValueError):
            decode_rand_k_temporal([sparse(2, [(0, 1.0)])], 1, ServerMemory.zeros_per_node(2, 2))


class TestMemoryUpdates:
    def test_pointwise_rule(self):
        mem = memory_update_per_node(ServerMemory("per_node", [[1.0, 1.0, 1.0]]), [sparse(3, [(1, 9.0)])])
        np.testing.assert_array_equal(mem.vectors, [[1.0, 9.0, 1.0]])

    def test_full_and_empty_messages(self):
        mem = ServerMemory("per_node", [[1.0, 2.0], [3.0, 4.0]])
        new = memory_update_per_node(mem, [SparseMessage(2, [0, 1], [7.0, 8.0]), SparseMessage(2, [], [])])
        np.testing.assert_array_equal(new.vectors, [[7.0, 8.0], [3.0, 4.0]])

    def test_shared_stores_estimate(self):
        mem = memory_update_shared(ServerMemory.zeros_shared(2), [0.5, -0.5])
        np.testing.assert_array_equal(mem.vectors, [0.5, -0.5])
        again = memory_update_shared(mem, [0.5, -0.5])
        np.testing.assert_array_equal(again.vectors, mem.vectors)

    def test_mode_errors(self):
        with pytest.raises(MemoryModeError):
            memory_update_per_node(ServerMemory.zeros_shared(2), [sparse(2, [(0, 1.0)])])
        with pytest.raises(MemoryModeError):
            memory_update_shared(ServerMemory.zeros_per_node(1, 2), [1.0, 1.0])


@pytest.mark.parametrize(
    "decoder",
    [
        Decoder("rand_k"),
        Decoder("spatial", t=TFunction("spatial_max", 3)),
        Decoder("spatial", t=TFunction("spatial_avg", 3)),
        Decoder("spatial", t=TFunction("spatial_opt", 3, rho=0.7)),
        Decoder("temporal", memory=ServerMemory("per_node", np.arange(15.0).reshape(3, 5) / 7)),
        Decoder("temporal", memory=ServerMemory("shared", np.linspace(-1, 1, 5))),
    ],
    ids=lambda dec: dec.name,
)
def test_batched_decode_matches_messages(decoder, rng):
    X = rng.standard_normal((3, 5))
    masks = random_k_masks(rng, (40, 3), 5, 2)
    batch = decoder.decode_masks(masks, X, 2)
    for b in range(40):
        msgs = [SparseMessage(5, np.flatnonzero(masks[b, i]), X[i, masks[b, i]]) for i in range(3)]
        np.testing.assert_allclose(batch[b], decoder.decode(msgs, 2), rtol=1e-14, atol=1e-15)


def test_decoder_requires_parameters():
    with pytest.raises(ValueError):
        Decoder("spatial")
    with pytest.raises(ValueError):
        Decoder("temporal")
