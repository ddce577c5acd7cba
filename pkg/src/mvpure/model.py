"""Forward-model data model: lead fields, covariances, epochs, and
synthetic ground-truth scenarios.

A scenario realizes the measurement model y = H0 q0 + n with uncorrelated
zero-mean q0 and n, so that the data covariance assembles analytically as
R = H0 Q0 H0^T + N.  Scenarios are the ground truth against which every
index and filter property is verified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyWindow,
    InfeasibleDimensions,
    NegativeGamma,
    QNotPositiveDefinite,
    RankDeficientSubset,
    TooFewSamples,
    UsageError,
)
from .numerics import _symmetrize, psd_power

COV_KINDS = ("data", "noise")

#: Redraw budget for the lead-field conditioning guards.
MAX_REDRAWS = 500


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LeadField:
    """Sensor gains for fixed-orientation candidate sources.

    ``gains`` is m x s: one row per channel, one column per candidate
    source (volts per unit dipole moment).  Columns must be nonzero.
    """

    gains: np.ndarray
    channel_names: tuple[str, ...]
    source_positions: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "gains", _freeze(self.gains))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if self.gains.ndim != 2:
            raise UsageError(f"lead field must be 2-D, got shape {self.gains.shape}")
        m, s = self.gains.shape
        if m < 2 or s < 1:
            raise UsageError(f"lead field needs m >= 2 channels and s >= 1 sources, got {m} x {s}")
        if len(self.channel_names) != m:
            raise UsageError(f"{len(self.channel_names)} channel names for {m} channels")
        norms = np.linalg.norm(self.gains, axis=0)
        if np.any(norms == 0.0):
            dead = int(np.argmin(norms))
            raise UsageError(f"candidate source {dead} has an all-zero gain column")
        if self.source_positions is not None:
            pos = _freeze(self.source_positions)
            if pos.shape != (s, 3):
                raise UsageError(f"source positions must be {s} x 3, got {pos.shape}")
            object.__setattr__(self, "source_positions", pos)

    @property
    def n_channels(self) -> int:
        return self.gains.shape[0]

    @property
    def n_sources(self) -> int:
        return self.gains.shape[1]


@dataclass(frozen=True)
class Regularization:
    gamma: float = 0.0
    applied: bool = False


@dataclass(frozen=True, eq=False)
class Covariance:
    """Symmetric PSD channel covariance with a regularization record.

    ``kind`` is "data" for the measurement covariance R and "noise" for N.
    ``n_samples`` is 0 for analytic (exactly constructed) matrices.
    """

    matrix: np.ndarray
    kind: str
    regularization: Regularization = field(default_factory=Regularization)
    n_samples: int = 0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _freeze(self.matrix))
        M = self.matrix
        if self.kind not in COV_KINDS:
            raise UsageError(f"covariance kind must be one of {COV_KINDS}, got {self.kind!r}")
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise UsageError(f"covariance must be square, got shape {M.shape}")
        scale = np.max(np.abs(M))
        if scale > 0 and np.max(np.abs(M - M.T)) > 1e-10 * scale:
            raise UsageError("covariance matrix is not symmetric within 1e-10 relative tolerance")
        evals = np.linalg.eigvalsh(_symmetrize(M))
        if evals[0] < -1e-10 * max(abs(evals[-1]), 1e-300):
            raise UsageError(
                f"covariance is not positive semidefinite (smallest eigenvalue {evals[0]:.3e})"
            )

    @property
    def n_channels(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SourceSet:
    """Ordered set of distinct candidate-source indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(set(idx)) != len(idx):
            raise UsageError(f"source indices must be distinct, got {idx}")
        if any(i < 0 for i in idx):
            raise UsageError(f"source indices must be non-negative, got {idx}")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def validate_for(self, leadfield: LeadField) -> None:
        s = leadfield.n_sources
        bad = [i for i in self.indices if i >= s]
        if bad:
            raise UsageError(f"source indices {bad} out of range for {s} candidate sources")
        if len(self.indices) > leadfield.n_channels:
            raise UsageError(
                f"{len(self.indices)} sources exceed {leadfield.n_channels} channels"
            )


@dataclass(frozen=True, eq=False)
class Epochs:
    """Epoched sensor data: n_epochs x m x n_times, in volts.

    ``t0`` is the time of the first sample relative to stimulus onset, so
    samples at negative times form the pre-stimulus (baseline) interval.
    """

    data: np.ndarray
    sfreq: float
    t0: float

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))
        if self.data.ndim != 3:
            raise UsageError(f"epochs must be 3-D (epochs x channels x times), got {self.data.shape}")
        n_epochs, _, n_times = self.data.shape
        if n_epochs < 1 or n_times < 2:
            raise UsageError("need at least one epoch and two time samples")
        if self.sfreq <= 0:
            raise UsageError(f"sampling frequency must be positive, got {self.sfreq}")

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.data.shape[2]) / self.sfreq


@dataclass(frozen=True, eq=False)
class Scenario:
    """Synthetic ground truth: lead field, true sources, and exact covariances."""

    leadfield: LeadField
    true_sources: SourceSet
    Q0: np.ndarray
    N: Covariance
    R: Covariance
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "Q0", _freeze(self.Q0))
        l0 = len(self.true_sources)
        if self.Q0.shape != (l0, l0):
            raise UsageError(f"Q0 must be {l0} x {l0}, got {self.Q0.shape}")
        if np.linalg.eigvalsh(_symmetrize(self.Q0))[0] <= 0:
            raise QNotPositiveDefinite("source covariance Q0 is not positive definite")
        H0 = self.leadfield.gains[:, list(self.true_sources)]
        resid = self.R.matrix - (H0 @ self.Q0 @ H0.T + self.N.matrix)
        scale = max(np.max(np.abs(self.R.matrix)), 1e-300)
        if np.max(np.abs(resid)) > 1e-10 * scale:
            raise UsageError("R does not equal H0 Q0 H0^T + N for this scenario")

    @property
    def n_sources_true(self) -> int:
        return len(self.true_sources)

    def true_gains(self) -> np.ndarray:
        return subset_leadfield(self.leadfield, self.true_sources)


def subset_leadfield(L: LeadField, theta: SourceSet) -> np.ndarray:
    """Columns of the lead field at the candidate set, in candidate order.

    Raises :class:`RankDeficientSubset` when the selected columns are
    numerically dependent (smallest singular value below 1e-10 of the
    largest), which signals co-located or parallel sources.
    """
    theta.validate_for(L)
    H = L.gains[:, list(theta.indices)]
    if H.shape[1] > H.shape[0]:
        raise RankDeficientSubset(
            f"{H.shape[1]} sources cannot be independent across {H.shape[0]} channels"
        )
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficientSubset(
            f"lead-field columns {theta.indices} are numerically dependent "
            f"(singular values {sv[0]:.3e} .. {sv[-1]:.3e})"
        )
    return H


def sample_covariance(E: Epochs, window: tuple[float, float], kind: str = "data") -> Covariance:
    """Unbiased sample covariance over all epochs and in-window samples.

    Data are de-meaned per channel (one pooled mean across epochs and
    samples) before the outer-product accumulation with divisor n - 1.
    """
    t_start, t_end = float(window[0]), float(window[1])
    if t_end < t_start:
        raise EmptyWindow(f"window end {t_end} precedes start {t_start}")
    times = E.times
    mask = (times >= t_start - 1e-12) & (times <= t_end + 1e-12)
    if not np.any(mask):
        raise EmptyWindow(
            f"window [{t_start}, {t_end}] s contains no samples; "
            f"epochs span [{times[0]:.6g}, {times[-1]:.6g}] s"
        )
    m = E.n_channels
    X = E.data[:, :, mask].transpose(1, 0, 2).reshape(m, -1)
    n = X.shape[1]
    if n < 2:
        raise TooFewSamples(f"covariance needs at least 2 samples, window has {n}")
    X = X - X.mean(axis=1, keepdims=True)
    C = _symmetrize(X @ X.T / (n - 1))
    return Covariance(matrix=C, kind=kind, n_samples=n)


def regularize(C: Covariance, gamma: float) -> Covariance:
    """Diagonal loading scaled by the mean channel variance.

    Returns a covariance with matrix C + gamma * (trace(C)/m) * I and the
    regularization record updated.  gamma = 0 leaves the matrix unchanged
    but still marks regularization as applied.
    """
    if gamma < 0:
        raise NegativeGamma(f"regularization factor must be >= 0, got {gamma}")
    m = C.n_channels
    loaded = C.matrix + gamma * (np.trace(C.matrix) / m) * np.eye(m)
    return Covariance(
        matrix=loaded,
        kind=C.kind,
        regularization=Regularization(gamma=float(gamma), applied=True),
        n_samples=C.n_samples,
    )


def _draw_leadfield(
    rng: np.random.Generator, m: int, s: int, l0: int, min_angle_deg: float
) -> tuple[np.ndarray, list[int]]:
    """Draw unit-norm gain columns until the conditioning guards pass."""
    max_cos = np.cos(np.deg2rad(min_angle_deg)) if min_angle_deg > 0 else None
    for _ in range(MAX_REDRAWS):
        gains = rng.standard_normal((m, s))
        gains /= np.linalg.norm(gains, axis=0)
        true = sorted(int(i) for i in rng.choice(s, size=l0, replace=False))
        sv = np.linalg.svd(gains[:, true], compute_uv=False)
        if sv[-1] <= 0.05 * sv[0]:
            continue
        if max_cos is not None:
            gram = np.abs(gains.T @ gains)
            np.fill_diagonal(gram, 0.0)
            if gram.max() >= max_cos:
                continue
        return gains, true
    raise InfeasibleDimensions(
        f"could not draw a well-conditioned {m} x {s} lead field with "
        f"{l0} sources and {min_angle_deg} deg separation in {MAX_REDRAWS} attempts"
    )


def synth_scenario(
    m: int,
    s: int,
    l0: int,
    source_snr,
    noise_kind: str = "white",
    correlation: float = 0.0,
    seed: int = 0,
    min_angle_deg: float = 0.0,
) -> Scenario:
    """Build a deterministic synthetic scenario.

    Lead-field columns are drawn uniformly on the unit sphere (redrawn
    until the true-source columns are well conditioned and, optionally,
    until all candidate columns are pairwise separated by at least
    ``min_angle_deg``).  The true-source covariance has diagonal
    source_snr_i**2 and off-diagonal correlation * snr_i * snr_j; the data
    covariance is assembled analytically as H0 Q0 H0^T + N.
    """
    snr = np.asarray(source_snr, dtype=np.float64).ravel()
    if m < 2 or s < 1 or not 1 <= l0 <= min(m - 1, s):
        raise InfeasibleDimensions(
            f"need 1 <= l0 <= min(m-1, s); got m={m}, s={s}, l0={l0}"
        )
    if snr.shape[0] != l0:
        raise InfeasibleDimensions(f"expected {l0} source SNR values, got {snr.shape[0]}")
    if np.any(snr <= 0):
        raise InfeasibleDimensions("source SNR values must be positive")
    if not 0 <= correlation < 1:
        raise InfeasibleDimensions(f"correlation must be in [0, 1), got {correlation}")
    if noise_kind not in ("white", "spd"):
        raise InfeasibleDimensions(f"noise kind must be 'white' or 'spd', got {noise_kind!r}")

    rng = np.random.default_rng(seed)
    gains, true = _draw_leadfield(rng, m, s, l0, min_angle_deg)

    corr = np.full((l0, l0), correlation)
    np.fill_diagonal(corr, 1.0)
    Q0 = _symmetrize(corr * np.outer(snr, snr))
    if np.linalg.eigvalsh(Q0)[0] <= 0:
        raise QNotPositiveDefinite(
            f"source covariance with correlation {correlation} is not positive definite"
        )

    if noise_kind == "white":
        N_mat = np.eye(m)
    else:
        basis, _ = np.linalg.qr(rng.standard_normal((m, m)))
        noise_evals = 0.5 + rng.random(m)
        N_mat = _symmetrize((basis * noise_evals) @ basis.T)

    H0 = gains[:, true]
    R_mat = _symmetrize(H0 @ Q0 @ H0.T + N_mat)

    leadfield = LeadField(
        gains=gains, channel_names=tuple(f"ch{i:03d}" for i in range(m))
    )
    return Scenario(
        leadfield=leadfield,
        true_sources=SourceSet(tuple(true)),
        Q0=Q0,
        N=Covariance(matrix=N_mat, kind="noise"),
        R=Covariance(matrix=R_mat, kind="data"),
        seed=seed,
    )


def simulate_epochs(
    scenario: Scenario,
    n_epochs: int,
    n_times: int,
    sfreq: float,
    seed: int = 0,
    pre_fraction: float = 0.5,
) -> Epochs:
    """Draw Gaussian epochs from a scenario.

    The first ``pre_fraction`` of each epoch (times < 0) contains noise
    only; from stimulus onset the true sources are active, so the
    post-stimulus sample covariance estimates R and the baseline estimates
    N.
    """
    if n_epochs < 1 or n_times < 2:
        raise InfeasibleDimensions("need at least one epoch and two samples")
    if not 0 < pre_fraction < 1:
        raise InfeasibleDimensions(f"pre_fraction must be in (0, 1), got {pre_fraction}")
    n_pre = max(1, int(round(pre_fraction * n_times)))
    n_post = n_times - n_pre
    if n_post < 1:
        raise InfeasibleDimensions("no post-stimulus samples left")
    rng = np.random.default_rng(seed)
    m = scenario.leadfield.n_channels
    l0 = scenario.n_sources_true
    N_half = psd_power(scenario.N.matrix, 0.5)
    Q0_half = psd_power(scenario.Q0, 0.5)
    H0 = scenario.true_gains()
    data = np.empty((n_epochs, m, n_times))
    for e in range(n_epochs):
        noise = N_half @ rng.standard_normal((m, n_times))
        q = Q0_half @ rng.standard_normal((l0, n_post))
        noise[:, n_pre:] += H0 @ q
        data[e] = noise
    return Epochs(data=data, sfreq=float(sfreq), t0=-n_pre / float(sfreq))
