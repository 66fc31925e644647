import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simaudit.corpus import EmbeddingSet, Vocab
from simaudit.errors import ConfigError, DataError, NumericalError
from simaudit.simspace import (
    DistMatrix,
    SimMatrix,
    check_k,
    cosine_similarity,
    knn,
    ranked_neighbors,
    similarity_matrix,
)
from tests.conftest import gaussian_embeddings, random_sim, sim_from_values


class TestCosine:
    def test_identical_direction(self):
        assert cosine_similarity([1, 0], [2, 0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_hand_value(self):
        # 32 / (sqrt(14) * sqrt(77))
        expect = 32.0 / (math.sqrt(14.0) * math.sqrt(77.0))
        got = cosine_similarity([1, 2, 3], [4, 5, 6])
        assert got == pytest.approx(expect, abs=1e-12)
        assert got == pytest.approx(0.974631846, abs=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(NumericalError):
            cosine_similarity([0, 0], [1, 0])

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            cosine_similarity([1, 0], [1, 0, 0])


class TestSimilarityMatrix:
    def test_orthonormal_basis_gives_identity(self):
        e = EmbeddingSet(["a", "b", "c"], np.eye(3))
        s = similarity_matrix(e)
        assert np.array_equal(s.values, np.eye(3))

    def test_symmetric_and_unit_diagonal(self):
        s = similarity_matrix(gaussian_embeddings(20, 7, seed=5))
        assert np.array_equal(s.values, s.values.T)
        assert np.array_equal(np.diag(s.values), np.ones(20))
        assert s.values.min() >= -1.0 and s.values.max() <= 1.0

    def test_tag_propagates(self):
        assert similarity_matrix(gaussian_embeddings(4, 3, 0, tag="m1")).tag == "m1"

    def test_matches_pairwise_definition(self):
        e = gaussian_embeddings(8, 5, seed=11)
        s = similarity_matrix(e)
        for i in range(8):
            for j in range(i + 1, 8):
                expect = cosine_similarity(e.matrix[i], e.matrix[j])
                assert s.values[i, j] == pytest.approx(expect, abs=1e-12)


class TestSimMatrixType:
    def test_diagonal_must_match_kind_max(self):
        with pytest.raises(DataError):
            sim_from_values(["a", "b"], [[0.5, 0.1], [0.1, 1.0]])

    def test_asymmetry_rejected(self):
        with pytest.raises(DataError):
            sim_from_values(["a", "b"], [[1.0, 0.3], [0.2, 1.0]])

    def test_cosine_out_of_range_rejected(self):
        with pytest.raises(DataError):
            sim_from_values(["a", "b"], [[1.0, 1.5], [1.5, 1.0]])

    def test_to_dissimilarity(self):
        s = sim_from_values(["a", "b"], [[1.0, 0.8], [0.8, 1.0]])
        d = s.to_dissimilarity()
        assert isinstance(d, DistMatrix)
        assert d.values[0, 1] == pytest.approx(0.2)
        assert d.values[0, 0] == 0.0

    def test_to_dissimilarity_ground_truth_value_set(self):
        vals = np.array([
            [1.0, 0.0, 1 / 3, 2 / 3],
            [0.0, 1.0, 1.0, 1 / 3],
            [1 / 3, 1.0, 1.0, 0.0],
            [2 / 3, 1 / 3, 0.0, 1.0],
        ])
        s = sim_from_values(list("abcd"), vals, kind="ground_truth")
        d = s.to_dissimilarity().values
        off = d[~np.eye(4, dtype=bool)]
        targets = (0.0, 1 / 3, 2 / 3, 1.0)
        assert all(min(abs(v - t) for t in targets) < 1e-12 for v in off)

    def test_restrict(self):
        s = random_sim(6, seed=1)
        sub = s.restrict(s.labels[1:4])
        assert sub.labels == s.labels[1:4]
        assert np.array_equal(sub.values, s.values[1:4, 1:4])

    def test_csv_round_trip(self, tmp_path):
        s = random_sim(5, seed=2, tag="m")
        p = tmp_path / "s.csv"
        s.save_csv(p, meta="run=1")
        back = SimMatrix.load_csv(p, kind="cosine")
        assert back.labels == s.labels
        np.testing.assert_allclose(back.values, s.values, rtol=0, atol=1e-8)
        assert open(p).readline().startswith("# run=1")


class TestCheckK:
    def test_bounds(self):
        assert check_k(1, 5) == 1
        assert check_k(4, 5) == 4
        for bad in (0, 5, -1):
            with pytest.raises(ConfigError):
                check_k(bad, 5)

    def test_type_policing(self):
        with pytest.raises(ConfigError):
            check_k(True, 5)
        with pytest.raises(ConfigError):
            check_k(2.0, 5)
        assert check_k(np.int64(3), 5) == 3


class TestKnn:
    def test_unambiguous_top1(self):
        s = sim_from_values(
            ["a", "b", "c"],
            [[1.0, 0.9, 0.1], [0.9, 1.0, 0.2], [0.1, 0.2, 1.0]],
        )
        assert knn(s, 1).lists()["a"] == ["b"]

    def test_four_point_top2(self):
        s = sim_from_values(
            ["a", "b", "c", "d"],
            [
                [1.0, 0.9, 0.8, 0.1],
                [0.9, 1.0, 0.3, 0.2],
                [0.8, 0.3, 1.0, 0.4],
                [0.1, 0.2, 0.4, 1.0],
            ],
        )
        assert knn(s, 2).lists()["a"] == ["b", "c"]

    def test_self_never_a_neighbor(self):
        s = random_sim(10, seed=3)
        idx = knn(s, 9)
        for i, row in enumerate(idx.neighbors):
            assert i not in row
            assert len(set(row)) == 9

    def test_all_ties_deterministic(self):
        # binary pile-style matrix: every off-diagonal pair in the block ties
        vals = np.ones((6, 6))
        vals[3:, :3] = 0.0
        vals[:3, 3:] = 0.0
        s = sim_from_values([f"x{i}" for i in range(6)], vals, kind="binary_cooccurrence")
        a = knn(s, 4, tie_seed=7).lists()
        b = knn(s, 4, tie_seed=7).lists()
        assert a == b
        c = knn(s, 4, tie_seed=8).lists()
        assert set(c) == set(a)  # same queries either way

    def test_ranked_neighbors_shape(self):
        order = ranked_neighbors(random_sim(7, seed=4))
        assert order.shape == (7, 6)

    def test_works_on_distances_too(self):
        s = random_sim(8, seed=6)
        d = s.to_dissimilarity()
        assert knn(s, 3).lists() == knn(d, 3).lists()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 10_000))
def test_noise_never_overrides_clear_margins(seed, tie_seed):
    """Jitter is bounded by 1e-9, so any larger similarity gap is decisive."""
    rng = np.random.default_rng(seed)
    n = 8
    raw = rng.uniform(-1, 1, size=(n, n))
    vals = (raw + raw.T) / 2
    np.fill_diagonal(vals, 1.0)
    # round to coarse grid, then make all entries distinct by tiny separated offsets
    vals = np.round(vals, 1)
    bump = (np.arange(n * n).reshape(n, n) + np.arange(n * n).reshape(n, n).T) * 1e-6
    vals = np.clip((vals + bump) / 2.0, -1, 1)
    np.fill_diagonal(vals, 1.0)
    s = sim_from_values([f"q{i}" for i in range(n)], vals)
    order = ranked_neighbors(s, tie_seed=tie_seed)
    for i in range(n):
        row = np.delete(vals[i], i)
        idx = np.delete(np.arange(n), i)
        expect = list(idx[np.argsort(-row, kind="stable")])
        assert list(order[i]) == expect
