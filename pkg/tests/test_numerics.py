"""Tests for the symmetric/PSD linear-algebra primitives.

Expected values come from independent oracles: direct reconstruction
(V diag V^T), squaring of matrix roots, and projector axioms checked
numerically. Nothing here is derived from the code paths under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvpure.errors import (
    DegenerateGap,
    NotPositiveDefinite,
    NotSimilarizable,
    NotSymmetric,
    RankOutOfRange,
)
from mvpure.numerics import (
    psd_power,
    sym_eig,
    top_r_oblique_projector,
    top_r_orth_projector,
)

from conftest import random_spd, random_symmetric


class TestSymEig:
    def test_identity(self):
        ep = sym_eig(np.eye(3))
        np.testing.assert_allclose(ep.values, [1.0, 1.0, 1.0], rtol=0, atol=1e-14)

    def test_diagonal_sorted_descending(self):
        ep = sym_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(ep.values, [3.0, 2.0, 1.0], atol=1e-14)
        # eigenvectors of a diagonal matrix are (signed) identity columns
        expected = np.eye(3)[:, [0, 2, 1]]
        np.testing.assert_allclose(np.abs(ep.vectors), expected, atol=1e-14)

    def test_reconstruction_oracle(self):
        A = random_symmetric(6, seed=7)
        ep = sym_eig(A)
        err = np.linalg.norm(ep.reconstruct() - A) / np.linalg.norm(A)
        assert err < 1e-9

    def test_orthonormality(self):
        A = random_symmetric(9, seed=3)
        ep = sym_eig(A)
        gram = ep.vectors.T @ ep.vectors
        assert np.max(np.abs(gram - np.eye(9))) < 1e-10

    def test_values_non_increasing(self):
        ep = sym_eig(random_symmetric(12, seed=11))
        assert np.all(np.diff(ep.values) <= 0)

    def test_sign_convention(self):
        ep = sym_eig(random_symmetric(8, seed=5))
        for j in range(8):
            col = ep.vectors[:, j]
            nz = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
            assert col[nz[0]] > 0

    def test_deterministic_bytes(self):
        A = random_symmetric(10, seed=42)
        e1, e2 = sym_eig(A), sym_eig(A.copy())
        assert e1.values.tobytes() == e2.values.tobytes()
        assert e1.vectors.tobytes() == e2.vectors.tobytes()

    def test_rejects_asymmetric(self):
        A = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotSymmetric):
            sym_eig(A)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            sym_eig(np.ones((2, 3)))


class TestPsdPower:
    def test_identity_inverse_sqrt(self):
        np.testing.assert_allclose(psd_power(np.eye(4), -0.5), np.eye(4), atol=1e-14)

    def test_diagonal_sqrt(self):
        np.testing.assert_allclose(
            psd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]), atol=1e-12
        )

    def test_sqrt_squares_back(self):
        A = random_spd(5, seed=2)
        root = psd_power(A, 0.5)
        assert np.linalg.norm(root @ root - A) / np.linalg.norm(A) < 1e-9

    def test_inverse(self):
        A = random_spd(6, seed=9)
        assert np.max(np.abs(psd_power(A, -1) @ A - np.eye(6))) < 1e-8

    def test_whitening(self):
        A = random_spd(7, seed=4)
        half = psd_power(A, -0.5)
        assert np.max(np.abs(half @ A @ half - np.eye(7))) < 1e-8

    def test_not_pd_negative_power(self):
        A = np.diag([1.0, -0.5])
        with pytest.raises(NotPositiveDefinite) as err:
            psd_power(A, -1)
        assert err.value.smallest_eigenvalue == pytest.approx(-0.5)

    def test_not_psd_sqrt(self):
        with pytest.raises(NotPositiveDefinite):
            psd_power(np.diag([1.0, -1.0]), 0.5)

    def test_unsupported_power(self):
        with pytest.raises(ValueError):
            psd_power(np.eye(2), 2.0)


class TestOrthProjector:
    def test_diagonal(self):
        P = top_r_orth_projector(np.diag([5.0, 3.0, 1.0]), 2)
        np.testing.assert_allclose(P, np.diag([1.0, 1.0, 0.0]), atol=1e-12)

    def test_full_rank_is_identity(self):
        A = random_spd(5, seed=1)
        np.testing.assert_array_equal(top_r_orth_projector(A, 5), np.eye(5))

    def test_projector_axioms(self):
        A = random_spd(6, seed=8)
        P = top_r_orth_projector(A, 3)
        assert np.max(np.abs(P @ P - P)) < 1e-9
        assert abs(np.trace(P) - 3.0) < 1e-9
        assert np.max(np.abs(P @ A - A @ P)) < 1e-8

    def test_rank_out_of_range(self):
        A = random_spd(4, seed=5)
        for r in (0, 5):
            with pytest.raises(RankOutOfRange):
                top_r_orth_projector(A, r)

    def test_degenerate_gap(self):
        with pytest.raises(DegenerateGap):
            top_r_orth_projector(np.diag([2.0, 1.0, 1.0]), 2)


class TestObliqueProjector:
    def test_symmetric_reduces_to_orthogonal(self):
        A = random_spd(5, seed=13)
        P_obl = top_r_oblique_projector(A, 2)
        P_orth = top_r_orth_projector(A, 2)
        assert np.max(np.abs(P_obl - P_orth)) < 1e-9

    def test_diagonal(self):
        P = top_r_oblique_projector(np.diag([0.9, 0.5, 0.1]), 1)
        np.testing.assert_allclose(P, np.diag([1.0, 0.0, 0.0]), atol=1e-12)

    def test_constructed_from_known_factors(self):
        # M = Q^{-1/2} D Q^{1/2} has oblique projector Q^{-1/2} I_r-pattern Q^{1/2}
        Q = random_spd(6, seed=21)
        Qh = psd_power(Q, 0.5)
        Qih = psd_power(Q, -0.5)
        D = np.diag([0.9, 0.7, 0.5, 0.3, 0.2, 0.1])
        M = Qih @ D @ Qh
        r = 3
        expected = Qih @ np.diag([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]) @ Qh
        P = top_r_oblique_projector(M, r, sym_factor=Q)
        assert np.max(np.abs(P - expected)) < 1e-8

    def test_projector_axioms(self):
        Q = random_spd(5, seed=30)
        Qh = psd_power(Q, 0.5)
        Qih = psd_power(Q, -0.5)
        D = np.diag([0.8, 0.6, 0.4, 0.3, 0.1])
        M = Qih @ D @ Qh
        P = top_r_oblique_projector(M, 2, sym_factor=Q)
        assert np.max(np.abs(P @ P - P)) < 1e-8
        assert np.max(np.abs(P @ M - M @ P)) < 1e-8

    def test_precomputed_factors_match(self):
        Q = random_spd(4, seed=17)
        Qh = psd_power(Q, 0.5)
        Qih = psd_power(Q, -0.5)
        D = np.diag([0.9, 0.5, 0.3, 0.1])
        M = Qih @ D @ Qh
        P1 = top_r_oblique_projector(M, 2, sym_factor=Q)
        P2 = top_r_oblique_projector(M, 2, sym_sqrt=Qh, sym_inv_sqrt=Qih)
        np.testing.assert_allclose(P1, P2, atol=1e-12)

    def test_wrong_factor_rejected(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((4, 4))  # no real-spectrum structure at all
        with pytest.raises(NotSimilarizable):
            top_r_oblique_projector(M, 1, sym_factor=random_spd(4, seed=8))

    def test_non_pd_factor_rejected(self):
        A = random_spd(3, seed=2)
        with pytest.raises(NotSimilarizable):
            top_r_oblique_projector(A, 1, sym_factor=np.diag([1.0, -1.0, 2.0]))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(min_value=2, max_value=32), seed=st.integers(0, 10_000))
def test_projector_properties_random_spd(n, seed):
    A = random_spd(n, seed)
    r = 1 + seed % n
    P = top_r_orth_projector(A, r)
    assert np.max(np.abs(P @ P - P)) < 1e-9
    assert abs(np.trace(P) - r) < 1e-9
    assert np.max(np.abs(P @ A - A @ P)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(n=st.integers(min_value=1, max_value=32), seed=st.integers(0, 10_000))
def test_whitening_random_spd(n, seed):
    A = random_spd(n, seed)
    half = psd_power(A, -0.5)
    assert np.max(np.abs(half @ A @ half - np.eye(n))) < 1e-8
