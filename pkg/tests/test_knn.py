import math

import numpy as np
import pytest

from xlalign.corpus import EmbeddingMatrix
from xlalign.knn import NeighborList, cosine, knn_search, unit_rows

from conftest import knn_sort_oracle


def test_cosine_examples():
    assert cosine([1, 0], [1, 0]) == 1.0
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 1], [1, 0]) == 1 / math.sqrt(2)


def test_cosine_errors():
    with pytest.raises(ValueError, match="zero-norm"):
        cosine([0, 0], [1, 0])
    with pytest.raises(ValueError, match="shape mismatch"):
        cosine([1, 0], [1, 0, 0])


def test_neighbor_list_invariants():
    with pytest.raises(ValueError, match="sorted"):
        NeighborList(0, ((1, 0.2), (2, 0.9)))
    with pytest.raises(ValueError, match="duplicate"):
        NeighborList(0, ((1, 0.9), (1, 0.2)))
    with pytest.raises(ValueError, match="outside"):
        NeighborList(0, ((1, 1.5),))


def test_knn_one_hot_identity():
    targets = EmbeddingMatrix("t", np.eye(3))
    queries = EmbeddingMatrix("q", np.array([[1.0, 0.0, 0.0]]))
    (result,) = knn_search(queries, targets, 1)
    assert result.neighbors == ((0, 1.0),)


def test_knn_tie_breaks_to_lower_index():
    s = math.sqrt(0.75)
    targets = EmbeddingMatrix("t", np.array([[0.5, s, 0.0], [0.5, -s, 0.0], [0.0, 0.0, 1.0]]))
    queries = EmbeddingMatrix("q", np.array([[1.0, 0.0, 0.0]]))
    (result,) = knn_search(queries, targets, 1)
    assert result.neighbors[0][0] == 0


def test_knn_k_out_of_range():
    m = EmbeddingMatrix("m", np.eye(3))
    with pytest.raises(ValueError, match="out of range"):
        knn_search(m, m, 0)
    with pytest.raises(ValueError, match="out of range"):
        knn_search(m, m, 4)


def test_knn_matches_sort_oracle():
    rng = np.random.default_rng(123)
    for trial in range(30):
        n_q = int(rng.integers(2, 60))
        n_t = int(rng.integers(2, 60))
        d = int(rng.integers(2, 12))
        q = rng.standard_normal((n_q, d))
        t = rng.standard_normal((n_t, d))
        if trial % 3 == 0 and n_t >= 4:
            t[1] = 2.0 * t[0]  # exact duplicate direction: forces a real tie
        k = int(rng.integers(1, n_t + 1))
        got = knn_search(EmbeddingMatrix("q", q), EmbeddingMatrix("t", t), k)
        expected = knn_sort_oracle(q, t, k)
        for row, exp in zip(got, expected):
            assert [i for i, _ in row.neighbors] == [i for i, _ in exp]
            for (_, c1), (_, c2) in zip(row.neighbors, exp):
                assert abs(c1 - c2) < 1e-12


def test_knn_scale_invariance():
    rng = np.random.default_rng(5)
    q = rng.standard_normal((10, 6))
    t = rng.standard_normal((20, 6))
    base = knn_search(EmbeddingMatrix("q", q), EmbeddingMatrix("t", t), 5)
    q2 = q.copy()
    t2 = t.copy()
    q2[3] *= 4.0
    t2[7] *= 0.5
    t2[11] *= 2.0
    scaled = knn_search(EmbeddingMatrix("q", q2), EmbeddingMatrix("t", t2), 5)
    for a, b in zip(base, scaled):
        assert a == b  # power-of-two scaling is exact


def test_knn_deterministic():
    rng = np.random.default_rng(9)
    q = EmbeddingMatrix("q", rng.standard_normal((40, 8)))
    t = EmbeddingMatrix("t", rng.standard_normal((50, 8)))
    assert knn_search(q, t, 6) == knn_search(q, t, 6)


def test_unit_rows():
    rng = np.random.default_rng(2)
    data = rng.standard_normal((5, 4))
    normed = unit_rows(data)
    np.testing.assert_allclose(np.linalg.norm(normed, axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValueError, match="zero row"):
        unit_rows(np.array([[0.0, 0.0]]))
