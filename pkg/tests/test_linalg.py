import itertools

import numpy as np
import pytest

from subclust.linalg import (
    kmeans,
    optimal_assignment,
    pairwise_l2,
    singular_value_threshold,
    soft_threshold,
    svd,
    sym_eig,
)


class TestSymEig:
    def test_rank_one(self):
        pairs = sym_eig(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert np.allclose(pairs.values, [2.0, 0.0])
        v0 = pairs.vectors[:, 0]
        assert np.allclose(np.abs(v0), [1 / np.sqrt(2)] * 2)

    def test_identity(self):
        pairs = sym_eig(np.eye(3))
        assert np.allclose(pairs.values, np.ones(3))

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((5, 5))
        a = a + a.T
        pairs = sym_eig(a)
        recon = pairs.vectors @ np.diag(pairs.values) @ pairs.vectors.T
        assert np.linalg.norm(recon - a) < 1e-8

    def test_descending(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((6, 6))
        a = a + a.T
        pairs = sym_eig(a)
        assert np.all(np.diff(pairs.values) <= 0)

    def test_orthonormal_vectors(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((7, 7))
        a = a + a.T
        pairs = sym_eig(a)
        assert np.linalg.norm(pairs.vectors.T @ pairs.vectors - np.eye(7)) < 1e-8

    def test_eigen_residual_property(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = rng.integers(2, 10)
            a = rng.standard_normal((n, n))
            a = a + a.T
            pairs = sym_eig(a)
            res = a @ pairs.vectors - pairs.vectors * pairs.values
            assert np.max(np.linalg.norm(res, axis=0)) <= 1e-6 * np.linalg.norm(a)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            sym_eig(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSvd:
    def test_diagonal(self):
        _, s, _ = svd(np.diag([3.0, 1.0]))
        assert np.allclose(s, [3.0, 1.0])

    def test_zero(self):
        _, s, _ = svd(np.zeros((3, 2)))
        assert np.allclose(s, 0.0)

    def test_reconstruction(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 6))
        u, s, v = svd(a)
        assert np.linalg.norm(u @ np.diag(s) @ v.T - a) < 1e-8 * np.linalg.norm(a)

    def test_descending_nonnegative(self):
        rng = np.random.default_rng(5)
        _, s, _ = svd(rng.standard_normal((5, 3)))
        assert np.all(s >= 0) and np.all(np.diff(s) <= 0)


class TestKmeans:
    def test_two_blobs(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((20, 2)) + np.array([10.0, 0.0])
        b = rng.standard_normal((20, 2)) - np.array([10.0, 0.0])
        pts = np.vstack([a, b])
        labels = kmeans(pts, 2, seed=0)
        assert len(set(labels[:20])) == 1
        assert len(set(labels[20:])) == 1
        assert labels[0] != labels[-1]

    def test_identical_points_single_cluster(self):
        labels = kmeans(np.ones((5, 3)), 1, seed=0)
        assert np.all(labels == 0)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal((30, 4))
        l1 = kmeans(pts, 3, seed=42)
        l2 = kmeans(pts, 3, seed=42)
        assert np.array_equal(l1, l2)

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), 4)


class TestAssignment:
    def test_identity(self):
        cost = np.ones((3, 3)) - np.eye(3)
        assert np.array_equal(optimal_assignment(cost), [0, 1, 2])

    def test_swap(self):
        perm = optimal_assignment(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert np.array_equal(perm, [1, 0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(8)
        cost = rng.standard_normal((6, 6))
        perm = optimal_assignment(cost)
        got = sum(cost[i, perm[i]] for i in range(6))
        best = min(
            sum(cost[i, p[i]] for i in range(6))
            for p in itertools.permutations(range(6))
        )
        assert got == pytest.approx(best)

    def test_brute_force_property(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            k = int(rng.integers(2, 7))
            cost = rng.standard_normal((k, k))
            perm = optimal_assignment(cost)
            got = sum(cost[i, perm[i]] for i in range(k))
            best = min(
                sum(cost[i, p[i]] for i in range(k))
                for p in itertools.permutations(range(k))
            )
            assert got == pytest.approx(best)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            optimal_assignment(np.zeros((2, 3)))


class TestPairwise:
    def test_three_four_five(self):
        x = np.array([[0.0, 3.0], [0.0, 4.0]])
        d = pairwise_l2(x)
        assert d[0, 1] == pytest.approx(5.0)
        assert d[0, 0] == 0.0

    def test_identical_columns(self):
        assert np.allclose(pairwise_l2(np.ones((4, 3))), 0.0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((4, 5))
        d = pairwise_l2(x)
        for i in range(5):
            for j in range(5):
                assert d[i, j] == pytest.approx(
                    np.linalg.norm(x[:, i] - x[:, j]), abs=1e-12
                )


class TestProximal:
    def test_soft_threshold_values(self):
        assert soft_threshold(np.array([[0.5]]), 0.2)[0, 0] == pytest.approx(0.3)
        assert soft_threshold(np.array([[-0.1]]), 0.2)[0, 0] == 0.0

    def test_soft_threshold_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((3, 3))
        got = soft_threshold(a, 0.05)
        for i in range(3):
            for j in range(3):
                expect = np.sign(a[i, j]) * max(abs(a[i, j]) - 0.05, 0.0)
                assert got[i, j] == pytest.approx(expect)

    def test_soft_threshold_rejects_negative_tau(self):
        with pytest.raises(ValueError):
            soft_threshold(np.zeros((2, 2)), -1.0)

    def test_svt_diagonal(self):
        got = singular_value_threshold(np.diag([3.0, 1.0]), 2.0)
        assert np.allclose(got, np.diag([1.0, 0.0]))

    def test_svt_tau_zero(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((3, 4))
        assert np.linalg.norm(singular_value_threshold(a, 0.0) - a) < 1e-10

    def test_svt_nuclear_norm_reduction(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((4, 4))
        _, s, _ = svd(a)
        got = singular_value_threshold(a, 0.5)
        _, s2, _ = svd(got)
        expected_drop = np.sum(np.minimum(s, 0.5))
        assert np.sum(s) - np.sum(s2) == pytest.approx(expected_drop, abs=1e-8)
