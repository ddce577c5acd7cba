"""Spatial-filter tests.

Oracles: hand-computed scalar filters, the unit-gain identity, naive
triple-loop multiplication for filter application, and the eigenvalue form
of the normalized reconstruction error (derived from the spectrum of
R N^-1) against the trace form.
"""

import numpy as np
import pytest

from mvpure.beamformer import (
    apply_filter,
    filter_mse,
    make_filter,
    make_lcmv,
    make_mvp,
    numerical_rank,
)
from mvpure.errors import (
    DimensionMismatch,
    RankOutOfRange,
    SourceSetMismatch,
    UsageError,
)
from mvpure.model import (
    Covariance,
    Epochs,
    LeadField,
    Scenario,
    SourceSet,
    simulate_epochs,
    synth_scenario,
)
from mvpure.numerics import psd_power
from mvpure.spectrum import rn_eigenvalues

from conftest import random_spd


def scenario(seed=0, l0=3, snr=(1.4, 1.0, 0.7), correlation=0.2, m=12, s=9):
    return synth_scenario(
        m=m, s=s, l0=l0, source_snr=list(snr[:l0]), noise_kind="spd",
        correlation=correlation, seed=seed,
    )


class TestLcmv:
    def test_identity_leadfield(self):
        C = Covariance(matrix=random_spd(4, seed=1), kind="data")
        W = make_lcmv(np.eye(4), C, "R")
        np.testing.assert_allclose(W.weights, np.eye(4), atol=1e-10)

    def test_scalar_hand_case(self):
        H0 = np.array([[1.0], [0.0]])
        W = make_lcmv(H0, Covariance(matrix=np.eye(2), kind="data"), "R")
        np.testing.assert_allclose(W.weights, [[1.0, 0.0]], atol=1e-12)

    def test_unit_gain(self):
        scn = scenario()
        W = make_lcmv(scn.true_gains(), scn.R, "R", source_set=scn.true_sources)
        assert np.max(np.abs(W.weights @ scn.true_gains() - np.eye(3))) < 1e-7
        assert W.gain_check < 1e-7

    def test_r_and_n_flavors_agree_on_model(self):
        scn = scenario(seed=3)
        w_r = make_lcmv(scn.true_gains(), scn.R, "R")
        w_n = make_lcmv(scn.true_gains(), scn.N, "N")
        assert np.max(np.abs(w_r.weights - w_n.weights)) < 1e-7

    def test_flavors_diverge_under_source_noise_correlation(self):
        # cross-covariance between sources and noise leaking outside the
        # source subspace breaks the R/N equivalence
        rng = np.random.default_rng(14)
        m, l0 = 10, 2
        H0 = np.linalg.qr(rng.standard_normal((m, l0)))[0]
        B = rng.standard_normal((m, l0))
        Q0 = np.diag([1.5, 1.0])
        gamma = 0.7
        N_eff = np.eye(m) + gamma**2 * B @ Q0 @ B.T
        cross = gamma * (H0 @ Q0 @ B.T)
        R_corr = H0 @ Q0 @ H0.T + cross + cross.T + N_eff
        w_r = make_lcmv(H0, Covariance(matrix=0.5 * (R_corr + R_corr.T), kind="data"), "R")
        w_n = make_lcmv(H0, Covariance(matrix=0.5 * (N_eff + N_eff.T), kind="noise"), "N")
        assert np.max(np.abs(w_r.weights - w_n.weights)) > 1e-3

    def test_kind_flavor_mismatch(self):
        scn = scenario()
        with pytest.raises(UsageError):
            make_lcmv(scn.true_gains(), scn.N, "R")


class TestMvp:
    def test_full_rank_equals_lcmv(self):
        scn = scenario(seed=5)
        H0 = scn.true_gains()
        for flavor, C in (("R", scn.R), ("N", scn.N)):
            full = make_mvp(H0, scn.R, scn.N, 3, flavor)
            base = make_lcmv(H0, C, flavor)
            assert np.max(np.abs(full.weights - base.weights)) < 1e-10

    def test_single_source_rank_one(self):
        scn = scenario(seed=6, l0=1, snr=(1.2,))
        H0 = scn.true_gains()
        w = make_mvp(H0, scn.R, scn.N, 1, "R")
        base = make_lcmv(H0, scn.R, "R")
        assert np.max(np.abs(w.weights - base.weights)) < 1e-10

    def test_gain_equals_projector(self):
        scn = scenario(seed=7)
        H0 = scn.true_gains()
        R_inv = psd_power(scn.R.matrix, -1)
        S0 = H0.T @ R_inv @ H0
        from mvpure.numerics import top_r_orth_projector

        P = top_r_orth_projector(0.5 * (S0 + S0.T), 2)
        w = make_mvp(H0, scn.R, scn.N, 2, "R")
        assert np.max(np.abs(w.weights @ H0 - P)) < 1e-7
        assert w.gain_check < 1e-7

    def test_weights_have_requested_rank(self):
        scn = scenario(seed=8)
        for r in (1, 2, 3):
            w = make_mvp(scn.true_gains(), scn.R, scn.N, r, "N")
            assert numerical_rank(w) == r == w.rank

    def test_rank_out_of_range(self):
        scn = scenario()
        with pytest.raises(RankOutOfRange):
            make_mvp(scn.true_gains(), scn.R, scn.N, 4, "R")


class TestApplyFilter:
    def test_identity(self):
        W = make_lcmv(np.eye(3), Covariance(matrix=np.eye(3), kind="data"), "R")
        data = np.arange(12.0).reshape(3, 4)
        np.testing.assert_allclose(apply_filter(W, data), data, atol=1e-12)

    def test_zero_data(self):
        scn = scenario()
        W = make_lcmv(scn.true_gains(), scn.R, "R")
        out = apply_filter(W, np.zeros((12, 5)))
        np.testing.assert_array_equal(out, np.zeros((3, 5)))

    def test_matches_naive_multiply(self):
        rng = np.random.default_rng(2)
        scn = scenario(seed=9)
        W = make_lcmv(scn.true_gains(), scn.R, "R")
        data = rng.standard_normal((12, 6))
        out = apply_filter(W, data)
        naive = np.zeros((3, 6))
        for i in range(3):
            for j in range(6):
                for c in range(12):
                    naive[i, j] += W.weights[i, c] * data[c, j]
        assert np.max(np.abs(out - naive)) < 1e-12

    def test_epochs_input(self):
        scn = scenario(seed=10)
        W = make_lcmv(scn.true_gains(), scn.R, "R")
        E = simulate_epochs(scn, n_epochs=4, n_times=20, sfreq=100.0, seed=3)
        out = apply_filter(W, E)
        assert out.shape == (4, 3, 20)
        np.testing.assert_allclose(out[2], W.weights @ E.data[2], atol=1e-12)

    def test_dimension_mismatch(self):
        scn = scenario()
        W = make_lcmv(scn.true_gains(), scn.R, "R")
        with pytest.raises(DimensionMismatch):
            apply_filter(W, np.zeros((5, 4)))


class TestFilterMse:
    def test_zero_filter(self):
        from mvpure.beamformer import SpatialFilter

        scn = scenario(seed=11)
        W0 = SpatialFilter(
            weights=np.zeros((3, 12)),
            kind="lcmv_r",
            rank=0,
            source_set=scn.true_sources,
            gain_check=1.0,
        )
        assert filter_mse(W0, scn) == pytest.approx(np.trace(scn.Q0))
        assert filter_mse(W0, scn, normalized=True) == pytest.approx(3.0)

    def test_source_set_mismatch(self):
        scn = scenario(seed=12)
        W = make_lcmv(scn.true_gains(), scn.R, "R", source_set=SourceSet((0, 1, 2)))
        if tuple(W.source_set) == tuple(scn.true_sources):
            W = make_lcmv(scn.true_gains(), scn.R, "R", source_set=SourceSet((0, 1, 3)))
        with pytest.raises(SourceSetMismatch):
            filter_mse(W, scn)

    def test_normalized_mse_eigenvalue_form(self):
        # filters built on the variance-normalized lead field have MSE
        # sum(1/nu_i) - r + l0 over the kept ranks, nu_i = lambda_i - 1
        scn = scenario(seed=13, l0=3, snr=(1.5, 1.0, 0.6))
        lam = rn_eigenvalues(scn.R, scn.N)
        nu = lam[:3] - 1.0
        H0_t = scn.true_gains() @ psd_power(scn.Q0, 0.5)
        for flavor in ("R", "N"):
            for r in (1, 2, 3):
                w = make_mvp(H0_t, scn.R, scn.N, r, flavor, source_set=scn.true_sources)
                expected = np.sum(1.0 / nu[:r]) - r + 3
                assert filter_mse(w, scn, normalized=True) == pytest.approx(
                    expected, abs=1e-7
                )

    def test_mse_ordering_when_tail_eigenvalues_small(self):
        # with every dropped eigenvalue below 3/2, lower rank gives lower
        # normalized error for both flavors
        scn = scenario(seed=14, l0=3, snr=(2.0, 0.6, 0.4))
        lam = rn_eigenvalues(scn.R, scn.N)
        assert lam[1] <= 1.5
        H0_t = scn.true_gains() @ psd_power(scn.Q0, 0.5)
        for flavor in ("R", "N"):
            mses = [
                filter_mse(
                    make_mvp(H0_t, scn.R, scn.N, r, flavor, source_set=scn.true_sources),
                    scn,
                    normalized=True,
                )
                for r in (1, 2, 3)
            ]
            assert mses[0] <= mses[1] + 1e-9 <= mses[2] + 2e-9


class TestMakeFilterFacade:
    def test_kinds(self):
        scn = scenario(seed=15)
        for kind in ("lcmv_r", "lcmv_n"):
            w = make_filter(scn.leadfield, scn.true_sources, scn.R, scn.N, kind)
            assert w.kind == kind and w.rank == 3
        w = make_filter(scn.leadfield, scn.true_sources, scn.R, scn.N, "mvp_r", rank=2)
        assert w.kind == "mvp_r" and w.rank == 2

    def test_mvp_requires_rank(self):
        scn = scenario(seed=15)
        with pytest.raises(UsageError):
            make_filter(scn.leadfield, scn.true_sources, scn.R, scn.N, "mvp_n")
