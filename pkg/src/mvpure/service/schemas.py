"""Pydantic request/response models for the HTTP service.

Matrices travel as row-major nested lists of floats; epochs as a
three-level nesting (epochs x channels x times).  Responses mirror the
core dataclasses field for field so the CLI can write files from them
without further computation.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Matrix = list[list[float]]
Tensor3 = list[list[list[float]]]

IndexKind = Literal["mai", "mpz", "mai_mvp", "mpz_mvp"]
FilterKind = Literal["lcmv_r", "lcmv_n", "mvp_r", "mvp_n"]
NoiseKind = Literal["white", "spd"]
RankRule = Literal["excess", "absolute"]


class HealthResponse(BaseModel):
    status: str
    version: str


class ThresholdsModel(BaseModel):
    l0_threshold: float = 0.1
    rank_threshold: float = 0.5


class SpectrumRequest(BaseModel):
    R: Matrix
    N: Matrix
    l0_threshold: float = 0.1
    rank_threshold: float = 0.5
    rank_rule: RankRule = "excess"


class SpectrumResponse(BaseModel):
    lambdas: list[float]
    l0_est: int
    r_opt: int
    thresholds: ThresholdsModel


class LocalizeRequest(BaseModel):
    leadfield: Matrix
    R: Matrix
    N: Matrix
    n_sources: int = Field(ge=1)
    rank: int = Field(ge=1)
    index_kind: IndexKind = "mpz_mvp"
    parallel_width: int = Field(default=0, ge=0)
    record_candidates: bool = False
    reg_data: float = Field(default=0.0, ge=0.0)
    reg_noise: float = Field(default=0.0, ge=0.0)


class TraceStepModel(BaseModel):
    step: int
    value: float
    chosen: Optional[int] = None
    candidates: Optional[list[tuple[int, float]]] = None


class SkipEventModel(BaseModel):
    step: int
    candidate: int
    reason: str


class LocalizeResponse(BaseModel):
    sources: list[int]
    index_trace: list[TraceStepModel]
    rank_used: int
    index_kind: IndexKind
    skipped: list[SkipEventModel]


class MakeFilterRequest(BaseModel):
    leadfield: Matrix
    sources: list[int]
    R: Matrix
    N: Matrix
    kind: FilterKind
    rank: Optional[int] = None
    reg_data: float = Field(default=0.0, ge=0.0)
    reg_noise: float = Field(default=0.0, ge=0.0)


class MakeFilterResponse(BaseModel):
    weights: Matrix
    kind: FilterKind
    rank: int
    gain_check: float
    sources: list[int]


class ApplyFilterRequest(BaseModel):
    weights: Matrix
    data: Matrix


class ApplyFilterResponse(BaseModel):
    reconstructed: Matrix


class SampleCovarianceRequest(BaseModel):
    epochs: Tensor3
    sfreq: float = Field(gt=0)
    t0: float
    window: tuple[float, float]
    kind: Literal["data", "noise"] = "data"
    reg: float = Field(default=0.0, ge=0.0)


class SampleCovarianceResponse(BaseModel):
    matrix: Matrix
    n_samples: int
    kind: str
    reg: float


class SimulateRequest(BaseModel):
    m: int = Field(ge=2)
    s: int = Field(ge=1)
    l0: int = Field(ge=1)
    snr: list[float]
    noise_kind: NoiseKind = "white"
    correlation: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = 0
    min_angle_deg: float = Field(default=0.0, ge=0.0)


class SimulateResponse(BaseModel):
    leadfield: Matrix
    channel_names: list[str]
    true_sources: list[int]
    Q0: Matrix
    N: Matrix
    R: Matrix
    seed: int
    spectrum: SpectrumResponse


class VerifyRequest(BaseModel):
    seeds: list[int] = [0, 1, 2, 3]
    break_noise_model: bool = False


class CheckResultModel(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[CheckResultModel]


class ErrorResponse(BaseModel):
    error: str
    message: str
