import numpy as np
import pytest

from corrmean.core import (
    DimensionMismatchError,
    MemoryModeError,
    ServerMemory,
    SparseMessage,
    TFunction,
    as_vector,
    exact_mean,
    hit_counts,
)


def msg(d, idx, vals=None):
    idx = list(idx)
    return SparseMessage(d, idx, vals if vals is not None else [1.0] * len(idx))


class TestSparseMessage:
    def test_round_trip(self):
        m = SparseMessage(4, [1, 3], [2.0, -1.0])
        np.testing.assert_array_equal(m.to_dense(), [0, 2, 0, -1])
        assert m.nnz == 2

    def test_arrays_are_read_only(self):
        m = SparseMessage(3, [0], [1.0])
        with pytest.raises(ValueError):
            m.values[0] = 5.0

    @pytest.mark.parametrize("idx", [[2, 1], [1, 1]])
    def test_indices_strictly_increasing(self, idx):
        with pytest.raises(ValueError):
            SparseMessage(3, idx, [1.0, 1.0])

    def test_index_out_of_range(self):
        with pytest.raises(DimensionMismatchError):
            SparseMessage(3, [3], [1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SparseMessage(3, [0, 1], [1.0])

    def test_empty_message(self):
        m = SparseMessage(3, [], [])
        np.testing.assert_array_equal(m.to_dense(), np.zeros(3))


def test_as_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        as_vector([1.0, np.nan])
    with pytest.raises(DimensionMismatchError):
        as_vector([])


def test_exact_mean_order_independent():
    X = np.array([[1e16], [1.0], [-1e16], [1.0]])
    assert exact_mean(X)[0] == 0.5
    assert exact_mean(X[::-1])[0] == 0.5


class TestHitCounts:
    def test_direct_count(self):
        hc = hit_counts([msg(3, [0, 1]), msg(3, [1, 2])])
        np.testing.assert_array_equal(hc.counts, [1, 2, 1])
        assert hc.n == 2

    def test_no_messages(self):
        np.testing.assert_array_equal(hit_counts([], dim=2).counts, [0, 0])

    def test_conservation(self):
        hc = hit_counts([msg(4, [0, 1]), msg(4, [1, 3]), msg(4, [2, 3])])
        assert hc.counts.sum() == 6

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            hit_counts([msg(3, [0]), msg(4, [0])])


class TestTFunction:
    def test_family_members(self):
        m = np.arange(1, 5)
        np.testing.assert_array_equal(TFunction("rand_k", 4)(m), [1, 1, 1, 1])
        np.testing.assert_array_equal(TFunction("spatial_max", 4)(m), [1, 2, 3, 4])
        np.testing.assert_allclose(TFunction("spatial_avg", 4)(m), 1 + 2 * (m - 1) / 3)
        np.testing.assert_allclose(TFunction("spatial_opt", 4, rho=1.5)(m), 1 + 1.5 * (m - 1) / 3)

    def test_degenerate_only_at_rho_minus_one(self):
        assert TFunction("spatial_opt", 5, rho=-1.0).degenerate
        assert TFunction("spatial_opt", 5, rho=-1.0)(5) == 0.0
        assert not TFunction("spatial_opt", 5, rho=-0.999).degenerate
        assert not TFunction("spatial_max", 5).degenerate

    def test_single_node(self):
        for kind in ("rand_k", "spatial_max", "spatial_avg"):
            assert TFunction(kind, 1)(1) == 1.0

    def test_custom_table(self):
        t = TFunction.from_table([1.0, 2.5, 4.0])
        assert t.n == 3
        np.testing.assert_array_equal(t.table()[1:], [1.0, 2.5, 4.0])
        with pytest.raises(ValueError):
            TFunction.from_table([1.0, -1.0])

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            TFunction("median", 3)
        with pytest.raises(ValueError):
            TFunction("spatial_opt", 3)


class TestServerMemory:
    def test_zero_init(self):
        assert not ServerMemory.zeros_per_node(3, 4).vectors.any()
        assert ServerMemory.zeros_shared(4).vectors.shape == (4,)

    def test_shared_broadcasts(self):
        mem = ServerMemory("shared", [1.0, 2.0])
        assert mem.as_matrix(3).shape == (3, 2)
        np.testing.assert_array_equal(mem.for_node(2), [1.0, 2.0])

    def test_modes_checked(self):
        with pytest.raises(MemoryModeError):
            ServerMemory("global", np.zeros(2))
        with pytest.raises(DimensionMismatchError):
            ServerMemory("per_node", np.zeros(2))
