import math

import numpy as np
import pytest
from scipy import stats

from corrmean.analytics import mse_rand_k, mse_spatial
from corrmean.core import ServerMemory, TFunction
from corrmean.estimate import Decoder
from corrmean.oracle import PatternLimitError, encoder_expectation, enumerate_exact, monte_carlo, random_k_masks
from corrmean.sparsify import EncoderSpec


class TestEnumerateExact:
    def test_two_outcome_value(self):
        res = enumerate_exact([[1.0, 1.0]], 1, Decoder("rand_k"))
        assert res.mse == 2.0 and res.patterns == 2
        np.testing.assert_array_equal(res.bias, [0.0, 0.0])

    @pytest.mark.parametrize(
        "decoder",
        [
            Decoder("rand_k"),
            Decoder("spatial", t=TFunction("spatial_avg", 2)),
            Decoder("temporal", memory=ServerMemory("per_node", [[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]])),
        ],
        ids=lambda d: d.name,
    )
    def test_lossless(self, decoder, rng):
        res = enumerate_exact(rng.standard_normal((2, 3)), 3, decoder)
        assert res.mse <= 1e-28
        assert np.max(np.abs(res.bias)) <= 1e-15

    def test_avg_unbiased(self, rng):
        res = enumerate_exact(rng.standard_normal((2, 2)), 1, Decoder("spatial", t=TFunction("spatial_avg", 2)))
        assert res.patterns == 4
        assert np.max(np.abs(res.bias)) <= 1e-12

    def test_pattern_guard(self):
        with pytest.raises(PatternLimitError, match="monte_carlo"):
            enumerate_exact(np.ones((3, 10)), 5, Decoder("rand_k"), max_patterns=1000)

    def test_prescaled_rejected(self):
        with pytest.raises(ValueError):
            enumerate_exact(np.ones((1, 2)), 1, Decoder("prescaled"))


class TestEncoderExpectation:
    def test_rand_k_second_moment(self):
        x = np.array([1.0, -2.0, 0.5])
        mean, second = encoder_expectation(x, EncoderSpec("rand_k", 1))
        np.testing.assert_allclose(mean, x, atol=1e-15)
        assert math.isclose(second, mse_rand_k([x], 1), rel_tol=1e-13)

    def test_top_k_has_no_expectation(self):
        with pytest.raises(ValueError):
            encoder_expectation([1.0, 2.0], EncoderSpec("top_k", 1))


class TestMasks:
    def test_rows_hold_k(self, rng):
        m = random_k_masks(rng, (500, 3), 7, 3)
        assert m.shape == (500, 3, 7)
        assert np.all(m.sum(axis=-1) == 3)

    def test_uniform_over_subsets(self):
        m = random_k_masks(np.random.default_rng(5), (12000,), 5, 2)
        codes = (m * (1 << np.arange(5))).sum(axis=1)
        _, counts = np.unique(codes, return_counts=True)
        assert len(counts) == 10
        assert stats.chisquare(counts).pvalue > 1e-3


class TestMonteCarlo:
    def test_agrees_with_enumeration(self, rng):
        X = rng.standard_normal((3, 4))
        dec = Decoder("spatial", t=TFunction("spatial_max", 3))
        exact = enumerate_exact(X, 2, dec).mse
        mc = monte_carlo(X, 2, dec, 10**5, seed=11)
        assert abs(mc.mse - exact) <= 4 * mc.stderr
        assert math.isclose(mse_spatial(X, 2, dec.t), exact, rel_tol=1e-9)

    def test_single_trial_has_no_stderr(self):
        assert math.isnan(monte_carlo(np.ones((2, 3)), 1, Decoder("rand_k"), 1, seed=0).stderr)

    def test_bit_identical_reruns_and_threads(self, rng):
        X = rng.standard_normal((4, 6))
        decs = [Decoder("rand_k"), Decoder("spatial", t=TFunction("spatial_avg", 4))]
        a = monte_carlo(X, 2, decs, 3500, seed=3)
        b = monte_carlo(X, 2, decs, 3500, seed=3)
        c = monte_carlo(X, 2, decs, 3500, seed=3, threads=4)
        for x, y, z in zip(a, b, c):
            assert x.mse == y.mse == z.mse and x.stderr == y.stderr == z.stderr
            assert np.array_equal(x.mean_estimate, y.mean_estimate)
            assert np.array_equal(x.mean_estimate, z.mean_estimate)

    def test_shared_patterns(self):
        # constant T decodes exactly like Rand-k, so with shared patterns the errors coincide
        X = np.random.default_rng(2).standard_normal((3, 5))
        a, b = monte_carlo(X, 2, [Decoder("rand_k"), Decoder("spatial", t=TFunction("rand_k", 3))], 2000, seed=1)
        assert math.isclose(a.mse, b.mse, rel_tol=1e-14)
