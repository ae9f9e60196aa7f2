import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_orthogonal_batch, random_pair
from twoinf.errors import DimensionError, OrthonormalityError, SymmetryError
from twoinf.linalg import (
    aligned_two_inf_error,
    as_matrix,
    hollow,
    leading_eigs,
    one_inf_norm,
    procrustes_align,
    random_orthonormal,
    sin_theta,
    spectral_norm,
    svd_r,
    two_inf_norm,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def brute_two_inf(A):
    best = 0.0
    for row in A:
        best = max(best, math.sqrt(sum(float(v) ** 2 for v in row)))
    return best


def brute_one_inf(A):
    return max(sum(abs(float(v)) for v in row) for row in A)


class TestNorms:
    def test_identity(self):
        assert two_inf_norm(np.eye(3)) == 1.0
        assert one_inf_norm(np.eye(3)) == 1.0

    def test_small_cases(self):
        assert two_inf_norm([[3, 4], [0, 0]]) == 5.0
        assert one_inf_norm([[1, -2], [3, 0]]) == 3.0

    def test_random_against_row_scan(self, rng):
        A = rng.standard_normal((6, 4))
        assert two_inf_norm(A) == pytest.approx(brute_two_inf(A), rel=1e-14)
        assert one_inf_norm(A) == pytest.approx(brute_one_inf(A), rel=1e-14)

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            two_inf_norm(np.zeros((0, 3)))
        with pytest.raises(DimensionError):
            one_inf_norm(np.zeros((2, 0)))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            as_matrix([[1.0, np.nan]])
        with pytest.raises(ValueError):
            as_matrix([[np.inf]])

    @pytest.mark.parametrize("shape", [(5, 40), (40, 5), (30, 30), (7, 15)])
    def test_spectral_norm_matches_svd(self, rng, shape):
        A = rng.standard_normal(shape)
        assert spectral_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-12)

    @given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
    def test_dominance(self, A):
        # ||A||_{2,inf} <= ||A|| and ||A||_{2,inf} <= ||A||_{1,inf}
        assert two_inf_norm(A) <= spectral_norm(A) * (1 + 1e-12) + 1e-12
        assert two_inf_norm(A) <= one_inf_norm(A) * (1 + 1e-12) + 1e-12


class TestHollow:
    def test_diagonal_matrix(self):
        assert np.array_equal(hollow(np.diag([1.0, 2.0, 3.0])), np.zeros((3, 3)))

    def test_definition(self):
        assert np.array_equal(hollow([[1, 2], [3, 4]]), np.array([[0.0, 2.0], [3.0, 0.0]]))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            hollow(np.ones((2, 3)))

    @settings(max_examples=60)
    @given(arrays(float, st.integers(1, 7).map(lambda n: (n, n)), elements=finite))
    def test_properties(self, A):
        S = A + A.T
        H = hollow(S)
        assert spectral_norm(H) <= 2 * spectral_norm(S) * (1 + 1e-12) + 1e-9
        assert two_inf_norm(H) <= two_inf_norm(S) + 1e-12
        assert one_inf_norm(H) <= one_inf_norm(S) + 1e-12
        assert np.array_equal(hollow(H), H)

    def test_linear(self, rng):
        A, B = rng.standard_normal((2, 5, 5))
        np.testing.assert_allclose(hollow(2.0 * A - 3.0 * B), 2.0 * hollow(A) - 3.0 * hollow(B), atol=1e-14)


class TestLeadingEigs:
    def test_diagonal(self):
        sp = leading_eigs(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(sp.spectrum, [3.0, 2.0])
        assert sp.next_value == pytest.approx(1.0)
        assert sin_theta(np.eye(3)[:, :2], sp.basis) < 1e-12

    def test_constructed(self, rng):
        n, r = 12, 3
        Q = random_orthonormal(n, n, rng)
        lam = np.array([5.0, 4.0, 3.0] + list(np.linspace(1, -1, n - 3)))
        Y = Q @ np.diag(lam) @ Q.T
        sp = leading_eigs(Y, r)
        np.testing.assert_allclose(sp.spectrum, lam[:r], atol=1e-8)
        assert sin_theta(Q[:, :r], sp.basis) < 1e-8
        assert sp.next_value == pytest.approx(1.0, abs=1e-8)

    def test_rank_deficient_tail(self, rng):
        U = random_orthonormal(10, 2, rng)
        sp = leading_eigs(U @ np.diag([3.0, 1.0]) @ U.T, 2)
        assert abs(sp.next_value) < 1e-8

    def test_magnitude_ordering(self):
        Y = np.diag([1.0, -5.0, 3.0, 0.5])
        sp = leading_eigs(Y, 2, ordering="magnitude")
        np.testing.assert_allclose(sp.spectrum, [-5.0, 3.0])
        assert sp.next_value == pytest.approx(1.0)
        alg = leading_eigs(Y, 2)
        np.testing.assert_allclose(alg.spectrum, [3.0, 1.0])

    def test_invariants(self, rng):
        A = rng.standard_normal((15, 15))
        sp = leading_eigs(A + A.T, 4)
        assert np.linalg.norm(sp.basis.T @ sp.basis - np.eye(4)) <= 1e-10
        assert np.all(np.diff(sp.spectrum) <= 0)
        assert sp.next_value <= sp.spectrum[-1]

    def test_reconstruction_from_full_decomposition(self, rng):
        A = rng.standard_normal((20, 20))
        Y = A + A.T
        w, Q = np.linalg.eigh(Y)
        r = 4
        sp = leading_eigs(Y, r)
        top = sp.basis @ np.diag(sp.spectrum) @ sp.basis.T
        rest = Q[:, :-r] @ np.diag(w[:-r]) @ Q[:, :-r].T
        assert np.linalg.norm(Y - top - rest, 2) <= 1e-8 * np.linalg.norm(Y, 2)

    def test_errors(self, rng):
        with pytest.raises(SymmetryError):
            leading_eigs(rng.standard_normal((4, 4)), 1)
        with pytest.raises(DimensionError):
            leading_eigs(np.eye(4), 4)
        with pytest.raises(DimensionError):
            leading_eigs(np.eye(4), 0)


class TestSvdR:
    def test_embedded_diagonal(self):
        X = np.zeros((3, 2))
        X[0, 0], X[1, 1] = 5.0, 1.0
        sp = svd_r(X, 1)
        assert sp.spectrum[0] == pytest.approx(5.0)
        assert abs(abs(sp.basis[0, 0]) - 1) < 1e-12

    def test_constructed(self, rng):
        U = random_orthonormal(8, 3, rng)
        V = random_orthonormal(6, 3, rng)
        sp = svd_r(U @ np.diag([4.0, 2.0, 1.0]) @ V.T, 2)
        np.testing.assert_allclose(sp.spectrum, [4.0, 2.0], atol=1e-12)
        assert sp.next_value == pytest.approx(1.0)
        assert sin_theta(U[:, :2], sp.basis) < 1e-10
        assert sin_theta(V[:, :2], sp.co_basis) < 1e-10

    def test_best_rank_r_error(self, rng):
        X = rng.standard_normal((50, 50))
        sp = svd_r(X, 5)
        approx = sp.basis @ np.diag(sp.spectrum) @ sp.co_basis.T
        d = np.linalg.svd(X, compute_uv=False)
        assert np.linalg.norm(X - approx) == pytest.approx(math.sqrt(np.sum(d[5:] ** 2)), abs=1e-8)

    @pytest.mark.parametrize("shape", [(6, 900), (900, 6)])
    def test_elongated_gram_route(self, rng, shape):
        X = rng.standard_normal(shape)
        sp = svd_r(X, 2)
        U, d, Vt = np.linalg.svd(X, full_matrices=False)
        np.testing.assert_allclose(sp.spectrum, d[:2], rtol=1e-12)
        assert sp.next_value == pytest.approx(d[2], rel=1e-8)
        assert sin_theta(U[:, :2], sp.basis) < 1e-10
        assert sin_theta(Vt[:2].T, sp.co_basis) < 1e-10
        assert np.linalg.norm(sp.co_basis.T @ sp.co_basis - np.eye(2)) < 1e-10

    def test_rank_out_of_range(self):
        with pytest.raises(DimensionError):
            svd_r(np.ones((3, 2)), 2)


class TestSubspaceMetrics:
    def test_procrustes_trivial(self, rng):
        U = random_orthonormal(10, 3, rng)
        np.testing.assert_allclose(procrustes_align(U, U), np.eye(3), atol=1e-12)
        R = random_orthonormal(3, 3, rng)
        np.testing.assert_allclose(procrustes_align(U, U @ R), R, atol=1e-12)

    def test_procrustes_random_search(self, rng):
        U, Uh = random_pair(rng, 20, 3)
        W = procrustes_align(U, Uh)
        np.testing.assert_allclose(W.T @ W, np.eye(3), atol=1e-12)
        best = np.linalg.norm(Uh - U @ W)
        O = random_orthogonal_batch(10_000, 3, rng)
        competitors = np.linalg.norm(Uh[None] - U[None] @ O, axis=(1, 2))
        assert best <= competitors.min() + 1e-9

    def test_orthonormality_checked(self, rng):
        with pytest.raises(OrthonormalityError):
            procrustes_align(rng.standard_normal((5, 2)), random_orthonormal(5, 2, rng))

    def test_sin_theta_cases(self):
        e1, e2 = np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])
        assert sin_theta(e1, e1) == 0.0
        assert sin_theta(e1, e2) == pytest.approx(1.0)
        t = math.pi / 6
        assert sin_theta(e1, np.array([[math.cos(t)], [math.sin(t)]])) == pytest.approx(0.5, abs=1e-15)

    def test_sin_theta_matches_cosine_formulas(self, rng):
        for r in (1, 3, 5):
            U, Uh = random_pair(rng, 30, r)
            s = np.linalg.svd(Uh.T @ U, compute_uv=False)
            assert sin_theta(U, Uh) == pytest.approx(math.sqrt(1 - s.min() ** 2), abs=1e-12)
            assert sin_theta(U, Uh, "frobenius") == pytest.approx(math.sqrt(r - np.sum(s**2)), abs=1e-12)
            assert 0 <= sin_theta(U, Uh) <= 1
            assert 0 <= sin_theta(U, Uh, "frobenius") <= math.sqrt(r)

    def test_sin_theta_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            sin_theta(random_orthonormal(5, 2, rng), random_orthonormal(5, 3, rng))

    def test_aligned_error_trivial(self, rng):
        U = random_orthonormal(12, 3, rng)
        assert aligned_two_inf_error(U, U) < 1e-14
        assert aligned_two_inf_error(U, U @ random_orthonormal(3, 3, rng)) < 1e-10

    def test_aligned_error_vs_random_search(self, rng):
        # W_U minimises the Frobenius error, not the 2,inf error; random search gives a
        # lower estimate of the 2,inf optimum which must not undercut it by more than sqrt(r).
        U, Uh = random_pair(rng, 15, 2, noise=0.2)
        val = aligned_two_inf_error(U, Uh)
        O = random_orthogonal_batch(10_000, 2, rng)
        D = Uh[None] - U[None] @ O
        search = np.sqrt(np.einsum("kij,kij->ki", D, D)).max(axis=1).min()
        assert val >= search - 1e-9 or val <= search * math.sqrt(2) + 1e-9
        # the aligned error is within the spectral-norm envelope
        assert val <= np.linalg.norm(Uh - U @ procrustes_align(U, Uh), 2) + 1e-12
