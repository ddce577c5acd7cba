"""FastAPI service wrapping the core package.

Usage errors map to 400, numerical failures (positive-definiteness,
convergence, degenerate spectra) to 409; payload schema violations are
FastAPI's usual 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..beamformer import SpatialFilter, apply_filter, make_filter
from ..errors import MvpureError, NumericalError, UsageError
from ..localizer import localize_iterative
from ..model import Covariance, Epochs, LeadField, SourceSet, regularize, sample_covariance, synth_scenario
from ..spectrum import analyze
from ..verify import run_suite
from . import schemas

app = FastAPI(
    title="mvpure",
    version=__version__,
    description=(
        "Multi-source activity indices and reduced-rank spatial filters "
        "for EEG/MEG source localization and reconstruction"
    ),
)


@app.exception_handler(MvpureError)
async def mvpure_error_handler(request: Request, exc: MvpureError):
    status = 409 if isinstance(exc, NumericalError) else 400
    return JSONResponse(
        status_code=status,
        content=schemas.ErrorResponse(error=type(exc).__name__, message=str(exc)).model_dump(),
    )


def _matrix(payload, name: str) -> np.ndarray:
    M = np.asarray(payload, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise UsageError(f"{name} must be a non-empty 2-D matrix, got shape {M.shape}")
    return M


def _covariance(payload, name: str, kind: str) -> Covariance:
    M = _matrix(payload, name)
    if M.shape[0] != M.shape[1]:
        raise UsageError(f"{name} must be square, got shape {M.shape}")
    return Covariance(matrix=0.5 * (M + M.T), kind=kind)


def _leadfield(payload) -> LeadField:
    gains = _matrix(payload, "leadfield")
    return LeadField(
        gains=gains, channel_names=tuple(f"ch{i:03d}" for i in range(gains.shape[0]))
    )


def _spectrum_response(report) -> schemas.SpectrumResponse:
    return schemas.SpectrumResponse(
        lambdas=report.lambdas.tolist(),
        l0_est=report.l0_est,
        r_opt=report.r_opt,
        thresholds=schemas.ThresholdsModel(
            l0_threshold=report.thresholds.l0_threshold,
            rank_threshold=report.thresholds.rank_threshold,
        ),
    )


@app.get("/api/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/api/spectrum", response_model=schemas.SpectrumResponse)
def spectrum_endpoint(req: schemas.SpectrumRequest):
    report = analyze(
        _covariance(req.R, "R", "data"),
        _covariance(req.N, "N", "noise"),
        l0_threshold=req.l0_threshold,
        rank_threshold=req.rank_threshold,
        rule=req.rank_rule,
    )
    return _spectrum_response(report)


@app.post("/api/localize", response_model=schemas.LocalizeResponse)
def localize_endpoint(req: schemas.LocalizeRequest):
    R = _covariance(req.R, "R", "data")
    N = _covariance(req.N, "N", "noise")
    if req.reg_data > 0:
        R = regularize(R, req.reg_data)
    if req.reg_noise > 0:
        N = regularize(N, req.reg_noise)
    result = localize_iterative(
        _leadfield(req.leadfield),
        R,
        N,
        l0=req.n_sources,
        r=req.rank,
        index_kind=req.index_kind,
        parallel_width=req.parallel_width,
        record_candidates=req.record_candidates,
    )
    payload = result.to_dict()
    return schemas.LocalizeResponse(
        sources=payload["sources"],
        index_trace=[schemas.TraceStepModel(**t) for t in payload["index_trace"]],
        rank_used=payload["rank_used"],
        index_kind=payload["index_kind"],
        skipped=[schemas.SkipEventModel(**s) for s in payload["skipped"]],
    )


@app.post("/api/make-filter", response_model=schemas.MakeFilterResponse)
def make_filter_endpoint(req: schemas.MakeFilterRequest):
    R = _covariance(req.R, "R", "data")
    N = _covariance(req.N, "N", "noise")
    if req.reg_data > 0:
        R = regularize(R, req.reg_data)
    if req.reg_noise > 0:
        N = regularize(N, req.reg_noise)
    filt = make_filter(
        _leadfield(req.leadfield),
        SourceSet(tuple(req.sources)),
        R,
        N,
        kind=req.kind,
        rank=req.rank,
    )
    return schemas.MakeFilterResponse(
        weights=filt.weights.tolist(),
        kind=filt.kind,
        rank=filt.rank,
        gain_check=filt.gain_check,
        sources=list(filt.source_set),
    )


@app.post("/api/apply-filter", response_model=schemas.ApplyFilterResponse)
def apply_filter_endpoint(req: schemas.ApplyFilterRequest):
    W = _matrix(req.weights, "weights")
    filt = SpatialFilter(
        weights=W, kind="lcmv_r", rank=min(W.shape), source_set=None, gain_check=0.0
    )
    out = apply_filter(filt, _matrix(req.data, "data"))
    return schemas.ApplyFilterResponse(reconstructed=out.tolist())


@app.post("/api/sample-covariance", response_model=schemas.SampleCovarianceResponse)
def sample_covariance_endpoint(req: schemas.SampleCovarianceRequest):
    data = np.asarray(req.epochs, dtype=np.float64)
    if data.ndim != 3:
        raise UsageError(f"epochs must be 3-D, got shape {data.shape}")
    cov = sample_covariance(
        Epochs(data=data, sfreq=req.sfreq, t0=req.t0), req.window, kind=req.kind
    )
    if req.reg > 0:
        cov = regularize(cov, req.reg)
    return schemas.SampleCovarianceResponse(
        matrix=cov.matrix.tolist(),
        n_samples=cov.n_samples,
        kind=cov.kind,
        reg=req.reg,
    )


@app.post("/api/simulate", response_model=schemas.SimulateResponse)
def simulate_endpoint(req: schemas.SimulateRequest):
    scn = synth_scenario(
        m=req.m,
        s=req.s,
        l0=req.l0,
        source_snr=req.snr,
        noise_kind=req.noise_kind,
        correlation=req.correlation,
        seed=req.seed,
        min_angle_deg=req.min_angle_deg,
    )
    report = analyze(scn.R, scn.N)
    return schemas.SimulateResponse(
        leadfield=scn.leadfield.gains.tolist(),
        channel_names=list(scn.leadfield.channel_names),
        true_sources=list(scn.true_sources),
        Q0=scn.Q0.tolist(),
        N=scn.N.matrix.tolist(),
        R=scn.R.matrix.tolist(),
        seed=scn.seed,
        spectrum=_spectrum_response(report),
    )


@app.post("/api/verify", response_model=schemas.VerifyResponse)
def verify_endpoint(req: schemas.VerifyRequest):
    results = run_suite(seeds=tuple(req.seeds), break_noise_model=req.break_noise_model)
    return schemas.VerifyResponse(
        passed=all(r.passed for r in results),
        checks=[
            schemas.CheckResultModel(name=r.name, passed=r.passed, detail=r.detail)
            for r in results
        ],
    )
