"""Spatial filters for source reconstruction.

The unit-gain minimum-variance (LCMV) filter is

    W = (H0^T C^-1 H0)^-1 H0^T C^-1,

built from either the data covariance R or the noise covariance N; under
the uncorrelated source/noise model both give the same weights.  Its
reduced-rank relaxations project the LCMV weights onto the rank-r
principal subspace of S0 = H0^T R^-1 H0 (data flavor) or
G0 = H0^T N^-1 H0 (noise flavor), trading unit-gain bias for lower output
variance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    RankDeficientSubset,
    RankOutOfRange,
    SourceSetMismatch,
    UsageError,
)
from .model import Covariance, Epochs, LeadField, Scenario, SourceSet, subset_leadfield
from .numerics import _symmetrize, psd_power, sym_eig, top_r_orth_projector

FILTER_KINDS = ("lcmv_r", "lcmv_n", "mvp_r", "mvp_n")

#: Condition number above which covariance inversion warns.
COND_WARN = 1e10


@dataclass(frozen=True, eq=False)
class SpatialFilter:
    """l x m weight matrix with provenance.

    ``gain_check`` records the worst-case deviation of W H0 from its
    construction target (the identity for unit-gain filters, the rank-r
    projector for reduced-rank ones) at build time.
    """

    weights: np.ndarray
    kind: str
    rank: int
    source_set: SourceSet | None
    gain_check: float

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise UsageError(f"filter kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        W = np.ascontiguousarray(self.weights, dtype=np.float64)
        W.flags.writeable = False
        object.__setattr__(self, "weights", W)

    @property
    def n_sources(self) -> int:
        return self.weights.shape[0]

    @property
    def n_channels(self) -> int:
        return self.weights.shape[1]


def _pd_inverse(M: np.ndarray, what: str) -> np.ndarray:
    """PD-checked inverse with a condition-number warning."""
    ep = sym_eig(M)
    smallest = float(ep.values[-1])
    if smallest <= 0:
        raise NotPositiveDefinite(
            f"{what} covariance is not positive definite", smallest_eigenvalue=smallest
        )
    cond = float(ep.values[0]) / smallest
    if cond > COND_WARN:
        warnings.warn(
            f"{what} covariance is ill-conditioned (condition number {cond:.2e}); "
            "consider regularizing",
            stacklevel=3,
        )
    return _symmetrize((ep.vectors / ep.values) @ ep.vectors.T)


def _check_full_column_rank(H0: np.ndarray) -> None:
    if H0.ndim != 2:
        raise UsageError(f"lead-field block must be 2-D, got shape {H0.shape}")
    m, l = H0.shape
    if l < 1 or l > m:
        raise RankDeficientSubset(f"{l} columns cannot be independent across {m} rows")
    sv = np.linalg.svd(H0, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficientSubset(
            f"lead-field block is numerically rank deficient "
            f"(singular values {sv[0]:.3e} .. {sv[-1]:.3e})"
        )


def _lcmv_parts(H0: np.ndarray, C: Covariance, what: str):
    """Return (W, H0^T C^-1 H0) for the unit-gain filter on covariance C."""
    _check_full_column_rank(H0)
    if C.n_channels != H0.shape[0]:
        raise DimensionMismatch(
            f"covariance is {C.n_channels} x {C.n_channels} but lead-field block has "
            f"{H0.shape[0]} rows"
        )
    C_inv = _pd_inverse(C.matrix, what)
    A = _symmetrize(H0.T @ C_inv @ H0)
    W = psd_power(A, -1) @ H0.T @ C_inv
    return W, A


def make_lcmv(
    H0: np.ndarray, C: Covariance, flavor: str, source_set: SourceSet | None = None
) -> SpatialFilter:
    """Unit-gain minimum-variance filter from the data (R) or noise (N) side.

    ``flavor`` "R" requires a data covariance, "N" a noise covariance.
    The returned weights satisfy W H0 = I to working precision.
    """
    if flavor not in ("R", "N"):
        raise UsageError(f"flavor must be 'R' or 'N', got {flavor!r}")
    expected_kind = "data" if flavor == "R" else "noise"
    if C.kind != expected_kind:
        raise UsageError(
            f"flavor {flavor} needs a {expected_kind!r} covariance, got {C.kind!r}"
        )
    H0 = np.asarray(H0, dtype=np.float64)
    W, _ = _lcmv_parts(H0, C, expected_kind)
    gain_check = float(np.max(np.abs(W @ H0 - np.eye(H0.shape[1]))))
    return SpatialFilter(
        weights=W,
        kind="lcmv_r" if flavor == "R" else "lcmv_n",
        rank=H0.shape[1],
        source_set=source_set,
        gain_check=gain_check,
    )


def make_mvp(
    H0: np.ndarray,
    R: Covariance,
    N: Covariance,
    r: int,
    flavor: str,
    source_set: SourceSet | None = None,
) -> SpatialFilter:
    """Reduced-rank minimum-variance filter of rank r.

    The data flavor projects the unit-gain weights onto the top-r
    eigenspace of H0^T R^-1 H0, the noise flavor onto that of
    H0^T N^-1 H0.  At r = l the projector is the identity and the filter
    coincides with the unit-gain one.
    """
    if flavor not in ("R", "N"):
        raise UsageError(f"flavor must be 'R' or 'N', got {flavor!r}")
    H0 = np.asarray(H0, dtype=np.float64)
    l = H0.shape[1] if H0.ndim == 2 else 0
    if not 1 <= r <= l:
        raise RankOutOfRange(f"rank must be in [1, {l}], got {r}")
    C = R if flavor == "R" else N
    expected_kind = "data" if flavor == "R" else "noise"
    if C.kind != expected_kind:
        raise UsageError(
            f"flavor {flavor} needs a {expected_kind!r} covariance, got {C.kind!r}"
        )
    W_full, A = _lcmv_parts(H0, C, expected_kind)
    P = top_r_orth_projector(A, r)
    W = P @ W_full
    gain_check = float(np.max(np.abs(W @ H0 - P)))
    return SpatialFilter(
        weights=W,
        kind="mvp_r" if flavor == "R" else "mvp_n",
        rank=r,
        source_set=source_set,
        gain_check=gain_check,
    )


def make_filter(
    L: LeadField,
    sources: SourceSet,
    R: Covariance,
    N: Covariance,
    kind: str,
    rank: int | None = None,
) -> SpatialFilter:
    """Build any filter kind directly from a lead field and source set."""
    H0 = subset_leadfield(L, sources)
    if kind == "lcmv_r":
        return make_lcmv(H0, R, "R", source_set=sources)
    if kind == "lcmv_n":
        return make_lcmv(H0, N, "N", source_set=sources)
    if kind in ("mvp_r", "mvp_n"):
        if rank is None:
            raise UsageError(f"filter kind {kind!r} requires a rank")
        return make_mvp(H0, R, N, rank, "R" if kind == "mvp_r" else "N", source_set=sources)
    raise UsageError(f"filter kind must be one of {FILTER_KINDS}, got {kind!r}")


def apply_filter(W: SpatialFilter, data):
    """Apply the weights to an m x n_times matrix or to epoched data.

    Returns an l x n_times matrix, or an n_epochs x l x n_times tensor
    for :class:`Epochs` input.
    """
    if isinstance(data, Epochs):
        if data.n_channels != W.n_channels:
            raise DimensionMismatch(
                f"filter expects {W.n_channels} channels, epochs have {data.n_channels}"
            )
        return np.einsum("lc,ect->elt", W.weights, data.data)
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != W.n_channels:
        raise DimensionMismatch(
            f"filter expects {W.n_channels} x n_times data, got shape {arr.shape}"
        )
    return W.weights @ arr


def filter_mse(W: SpatialFilter, scenario: Scenario, normalized: bool = False) -> float:
    """Analytic reconstruction mean squared error of W on a scenario.

    The plain form measures the error of reconstructing the raw source
    amplitudes:  tr(W R W^T) - 2 tr(W H0 Q0) + tr(Q0).  The normalized
    form measures it in the variance-normalized source parametrization
    (sources scaled to unit covariance, lead field absorbed as
    H0 Q0^{1/2}):  tr(W R W^T) - 2 tr(W H0 Q0^{1/2}) + l0.  Pass filters
    built on the correspondingly transformed lead-field block when using
    the normalized form.
    """
    if W.source_set is None or W.source_set != scenario.true_sources:
        raise SourceSetMismatch(
            f"filter sources {None if W.source_set is None else tuple(W.source_set)} "
            f"do not match scenario sources {tuple(scenario.true_sources)}"
        )
    H0 = scenario.true_gains()
    Q0 = scenario.Q0
    R = scenario.R.matrix
    Wm = W.weights
    if Wm.shape != (H0.shape[1], H0.shape[0]):
        raise DimensionMismatch(
            f"weights shape {Wm.shape} does not match {H0.shape[1]} sources x "
            f"{H0.shape[0]} channels"
        )
    quad = float(np.trace(Wm @ R @ Wm.T))
    if normalized:
        H0_t = H0 @ psd_power(Q0, 0.5)
        return quad - 2.0 * float(np.trace(Wm @ H0_t)) + H0.shape[1]
    return quad - 2.0 * float(np.trace(Wm @ H0 @ Q0)) + float(np.trace(Q0))


def numerical_rank(W: SpatialFilter) -> int:
    """Numerical rank of the weights at tolerance 1e-9 of the top singular value."""
    sv = np.linalg.svd(W.weights, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > 1e-9 * sv[0]))
