"""HTTP layer tests: endpoint parity with the core package and error mapping."""

import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from mvpure.beamformer import make_filter
from mvpure.localizer import localize_iterative
from mvpure.model import sample_covariance, simulate_epochs, synth_scenario
from mvpure.service import app
from mvpure.spectrum import analyze


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def scn():
    return synth_scenario(
        m=10, s=8, l0=2, source_snr=[1.4, 1.0], noise_kind="spd",
        correlation=0.2, seed=21, min_angle_deg=25,
    )


class TestHealth:
    def test_health(self, client):
        out = client.get("/api/health")
        assert out.status_code == 200
        assert out.json()["status"] == "ok"


class TestSpectrumEndpoint:
    def test_parity_with_core(self, client, scn):
        resp = client.post(
            "/api/spectrum",
            json={"R": scn.R.matrix.tolist(), "N": scn.N.matrix.tolist()},
        )
        assert resp.status_code == 200
        out = resp.json()
        report = analyze(scn.R, scn.N)
        assert out["l0_est"] == report.l0_est
        assert out["r_opt"] == report.r_opt
        np.testing.assert_array_equal(np.asarray(out["lambdas"]), report.lambdas)

    def test_non_pd_noise_is_numerical_error(self, client):
        resp = client.post(
            "/api/spectrum",
            json={"R": np.eye(3).tolist(), "N": np.zeros((3, 3)).tolist()},
        )
        assert resp.status_code == 409
        assert resp.json()["error"] == "NotPositiveDefinite"

    def test_shape_mismatch_is_usage_error(self, client):
        resp = client.post(
            "/api/spectrum",
            json={"R": np.eye(3).tolist(), "N": np.eye(4).tolist()},
        )
        assert resp.status_code == 400

    def test_malformed_payload_is_422(self, client):
        resp = client.post("/api/spectrum", json={"R": "nope"})
        assert resp.status_code == 422


class TestLocalizeEndpoint:
    def test_parity_with_core(self, client, scn):
        resp = client.post(
            "/api/localize",
            json={
                "leadfield": scn.leadfield.gains.tolist(),
                "R": scn.R.matrix.tolist(),
                "N": scn.N.matrix.tolist(),
                "n_sources": 2,
                "rank": 2,
                "index_kind": "mpz_mvp",
            },
        )
        assert resp.status_code == 200
        out = resp.json()
        core = localize_iterative(scn.leadfield, scn.R, scn.N, 2, 2, "mpz_mvp")
        assert out["sources"] == list(core.sources)
        assert [t["value"] for t in out["index_trace"]] == [
            t.value for t in core.index_trace
        ]

    def test_infeasible_dimensions_400(self, client, scn):
        resp = client.post(
            "/api/localize",
            json={
                "leadfield": scn.leadfield.gains.tolist(),
                "R": scn.R.matrix.tolist(),
                "N": scn.N.matrix.tolist(),
                "n_sources": 40,
                "rank": 1,
            },
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "InfeasibleDimensions"


class TestFilterEndpoints:
    def test_make_and_apply_parity(self, client, scn):
        resp = client.post(
            "/api/make-filter",
            json={
                "leadfield": scn.leadfield.gains.tolist(),
                "sources": list(scn.true_sources),
                "R": scn.R.matrix.tolist(),
                "N": scn.N.matrix.tolist(),
                "kind": "mvp_r",
                "rank": 1,
            },
        )
        assert resp.status_code == 200
        out = resp.json()
        core = make_filter(scn.leadfield, scn.true_sources, scn.R, scn.N, "mvp_r", rank=1)
        np.testing.assert_array_equal(np.asarray(out["weights"]), core.weights)
        assert out["rank"] == 1 and out["kind"] == "mvp_r"

        data = np.linspace(-1, 1, scn.leadfield.n_channels * 4).reshape(-1, 4)
        applied = client.post(
            "/api/apply-filter", json={"weights": out["weights"], "data": data.tolist()}
        )
        assert applied.status_code == 200
        np.testing.assert_allclose(
            np.asarray(applied.json()["reconstructed"]), core.weights @ data, atol=1e-12
        )

    def test_missing_rank_is_usage_error(self, client, scn):
        resp = client.post(
            "/api/make-filter",
            json={
                "leadfield": scn.leadfield.gains.tolist(),
                "sources": list(scn.true_sources),
                "R": scn.R.matrix.tolist(),
                "N": scn.N.matrix.tolist(),
                "kind": "mvp_n",
            },
        )
        assert resp.status_code == 400


class TestSampleCovarianceEndpoint:
    def test_parity_with_core(self, client, scn):
        E = simulate_epochs(scn, n_epochs=4, n_times=40, sfreq=100.0, seed=2)
        resp = client.post(
            "/api/sample-covariance",
            json={
                "epochs": E.data.tolist(),
                "sfreq": E.sfreq,
                "t0": E.t0,
                "window": [0.0, 1.0],
                "kind": "data",
            },
        )
        assert resp.status_code == 200
        core = sample_covariance(E, (0.0, 1.0))
        np.testing.assert_array_equal(np.asarray(resp.json()["matrix"]), core.matrix)
        assert resp.json()["n_samples"] == core.n_samples

    def test_empty_window_is_usage_error(self, client, scn):
        E = simulate_epochs(scn, n_epochs=2, n_times=20, sfreq=100.0, seed=2)
        resp = client.post(
            "/api/sample-covariance",
            json={
                "epochs": E.data.tolist(),
                "sfreq": E.sfreq,
                "t0": E.t0,
                "window": [5.0, 6.0],
            },
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "EmptyWindow"


class TestSimulateEndpoint:
    def test_deterministic(self, client):
        payload = {"m": 8, "s": 6, "l0": 1, "snr": [1.0], "seed": 11}
        a = client.post("/api/simulate", json=payload)
        b = client.post("/api/simulate", json=payload)
        assert a.status_code == 200
        assert a.json() == b.json()

    def test_infeasible(self, client):
        resp = client.post(
            "/api/simulate", json={"m": 4, "s": 6, "l0": 5, "snr": [1.0] * 5, "seed": 0}
        )
        assert resp.status_code == 400


class TestVerifyEndpoint:
    def test_passes(self, client):
        resp = client.post("/api/verify", json={"seeds": [0, 1]})
        assert resp.status_code == 200
        out = resp.json()
        assert out["passed"] is True
        assert len(out["checks"]) == 10

    def test_negative_control_fails(self, client):
        resp = client.post(
            "/api/verify", json={"seeds": [0], "break_noise_model": True}
        )
        assert resp.status_code == 200
        assert resp.json()["passed"] is False
