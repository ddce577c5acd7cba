"""Multi-source neural activity indices.

For a candidate set theta with selected lead-field columns H, the kernel
matrices are

    G = H^T N^-1 H          (noise-whitened gain)
    S = H^T R^-1 H          (data-whitened gain)
    T = H^T R^-1 N R^-1 H
    Q = S^-1 - G^-1         (residual source covariance)

and the indices are

    mai      tr(G S^-1) - l
    mpz      tr(S T^-1) - l
    mai_ext  sum of the top-r eigenvalues of G S^-1, minus r
    mpz_ext  sum of the top-r eigenvalues of S T^-1, minus r
    mai_mvp  reduced-rank index equal to mai for l <= r and to the top-r
             eigenvalue sum of G S^-1 minus r otherwise
    mpz_mvp  reduced-rank index equal to mpz for l <= r and to
             tr(S T^-1 P) - r otherwise, with P the oblique projector onto
             the rank-r principal subspace of S Q

mai_mvp and mpz_mvp peak exactly at the true sources for every rank, and
their optimum equals the top-r eigenvalue sum of R N^-1 minus r.  The
trace forms above are the production path; the definitional forms through
the Q^{1/2}-transformed (tilde) matrices are kept behind ``definitional=True``
for cross-verification.

Eigenvalues of nonsymmetric products are always obtained through
symmetric similarities (S^{-1/2} G S^{-1/2} and friends); no nonsymmetric
eigensolver is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvariantViolation,
    QNotPositiveDefinite,
    RankOutOfRange,
    UsageError,
)
from .model import Covariance, LeadField, SourceSet, subset_leadfield
from .numerics import _projector_from_pair, _symmetrize, psd_power, sym_eig

#: Relative floor under which the residual source covariance counts as singular.
Q_PD_EPS = 1e-10


@dataclass(frozen=True)
class KernelCaches:
    S_inv: np.ndarray
    G_inv: np.ndarray
    Q_sqrt: np.ndarray
    Q_inv_sqrt: np.ndarray


@dataclass(frozen=True, eq=False)
class IndexKernel:
    """Kernel matrices of one candidate source set, with inverse caches."""

    G: np.ndarray
    S: np.ndarray
    T: np.ndarray
    Q: np.ndarray
    source_set: SourceSet
    caches: KernelCaches

    @property
    def l(self) -> int:
        return self.G.shape[0]


class KernelFactory:
    """Builds kernels for many candidate sets against one (R, N) pair.

    The covariance inverses are computed once here, so a localization
    sweep costs one small eigenproblem per candidate instead of repeated
    m x m inversions.
    """

    def __init__(self, L: LeadField, R: Covariance, N: Covariance):
        if R.kind != "data" or N.kind != "noise":
            raise UsageError(
                f"expected (data, noise) covariances, got ({R.kind!r}, {N.kind!r})"
            )
        if R.n_channels != L.n_channels or N.n_channels != L.n_channels:
            raise UsageError(
                f"covariance size must match the {L.n_channels}-channel lead field"
            )
        self.leadfield = L
        self._R_inv = psd_power(R.matrix, -1)
        self._N_inv = psd_power(N.matrix, -1)
        self._TN_core = _symmetrize(self._R_inv @ N.matrix @ self._R_inv)

    def build(self, theta: SourceSet) -> IndexKernel:
        H = subset_leadfield(self.leadfield, theta)
        G = _symmetrize(H.T @ self._N_inv @ H)
        S = _symmetrize(H.T @ self._R_inv @ H)
        T = _symmetrize(H.T @ self._TN_core @ H)

        gs_min = float(np.linalg.eigvalsh(_symmetrize(G - S))[0])
        if gs_min <= -1e-9:
            raise QNotPositiveDefinite(
                f"G - S has eigenvalue {gs_min:.3e} < 0: data covariance does not "
                "dominate the noise covariance on this candidate set"
            )
        S_inv = psd_power(S, -1)
        G_inv = psd_power(G, -1)
        Q = _symmetrize(S_inv - G_inv)
        q_eig = sym_eig(Q)
        q_max = float(q_eig.values[0])
        q_min = float(q_eig.values[-1])
        if q_max <= 0 or q_min <= Q_PD_EPS * q_max:
            raise QNotPositiveDefinite(
                f"residual source covariance for {theta.indices} is not positive "
                f"definite (eigenvalues {q_min:.3e} .. {q_max:.3e})"
            )
        half = np.sqrt(q_eig.values)
        Q_sqrt = _symmetrize((q_eig.vectors * half) @ q_eig.vectors.T)
        Q_inv_sqrt = _symmetrize((q_eig.vectors / half) @ q_eig.vectors.T)
        return IndexKernel(
            G=G,
            S=S,
            T=T,
            Q=Q,
            source_set=theta,
            caches=KernelCaches(
                S_inv=S_inv, G_inv=G_inv, Q_sqrt=Q_sqrt, Q_inv_sqrt=Q_inv_sqrt
            ),
        )


def build_kernel(
    L: LeadField, theta: SourceSet, R: Covariance, N: Covariance
) -> IndexKernel:
    """Assemble the kernel matrices for one candidate source set.

    Raises :class:`RankDeficientSubset` when the selected columns are
    dependent and :class:`QNotPositiveDefinite` when the residual source
    covariance S^-1 - G^-1 is not positive definite (the candidate set
    cannot carry an activity index; searches treat it as minus infinity).
    """
    return KernelFactory(L, R, N).build(theta)


def _check_rank(k: IndexKernel, r: int, cap_l: bool) -> None:
    if r < 1:
        raise RankOutOfRange(f"rank must be >= 1, got {r}")
    if cap_l and r > k.l:
        raise RankOutOfRange(f"rank {r} exceeds candidate set size {k.l}")


def _top_eigvals_pencil(A: np.ndarray, B_inv_sqrt: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of A B^-1 via the symmetric B^{-1/2} A B^{-1/2}."""
    return sym_eig(_symmetrize(B_inv_sqrt @ A @ B_inv_sqrt)).values


def mai(k: IndexKernel) -> float:
    """Full-rank activity index tr(G S^-1) - l."""
    return float(np.trace(k.G @ k.caches.S_inv)) - k.l


def mpz(k: IndexKernel) -> float:
    """Full-rank pseudo-Z index tr(S T^-1) - l."""
    T_inv = psd_power(k.T, -1)
    return float(np.trace(k.S @ T_inv)) - k.l


def mai_ext(k: IndexKernel, r: int) -> float:
    """Top-r eigenvalue sum of G S^-1, minus r."""
    _check_rank(k, r, cap_l=True)
    S_inv_sqrt = psd_power(k.S, -0.5)
    vals = _top_eigvals_pencil(k.G, S_inv_sqrt)
    return float(np.sum(vals[:r])) - r


def mpz_ext(k: IndexKernel, r: int) -> float:
    """Top-r eigenvalue sum of S T^-1, minus r."""
    _check_rank(k, r, cap_l=True)
    T_inv_sqrt = psd_power(k.T, -0.5)
    vals = _top_eigvals_pencil(k.S, T_inv_sqrt)
    return float(np.sum(vals[:r])) - r


def _tilde(k: IndexKernel, M: np.ndarray) -> np.ndarray:
    Qh = k.caches.Q_sqrt
    return _symmetrize(Qh @ M @ Qh)


def _s_tilde_eigen(k: IndexKernel):
    """Eigendecomposition of Q^{1/2} S Q^{1/2}, checked to lie in (0, 1).

    The spectrum of the transformed data-whitened gain (equivalently of
    S Q) must sit strictly inside the unit interval; anything else means
    the kernel matrices are mutually inconsistent.
    """
    ep = sym_eig(_tilde(k, k.S))
    lo, hi = float(ep.values[-1]), float(ep.values[0])
    if lo <= 0 or hi >= 1 + 1e-9:
        raise InvariantViolation(
            f"eigenvalues of the transformed data-whitened gain lie in "
            f"[{lo:.3e}, {hi:.3e}], expected the open unit interval"
        )
    return ep


def mai_mvp(k: IndexKernel, r: int, definitional: bool = False) -> float:
    """Reduced-rank unbiased activity index.

    Equals :func:`mai` when the candidate set is no larger than the rank.
    Otherwise the production path sums the top-r eigenvalues of G S^-1 and
    subtracts r; ``definitional=True`` instead evaluates the defining
    trace over the Q^{1/2}-transformed matrices with an orthogonal rank-r
    projector (the two agree to roundoff and are cross-checked in tests).
    """
    _check_rank(k, r, cap_l=False)
    if k.l <= r:
        return mai(k)
    if not definitional:
        S_inv_sqrt = psd_power(k.S, -0.5)
        vals = _top_eigvals_pencil(k.G, S_inv_sqrt)
        return float(np.sum(vals[:r])) - r
    G_t = _tilde(k, k.G)
    P = _projector_from_pair(_s_tilde_eigen(k), r, None)
    Qih = k.caches.Q_inv_sqrt
    S_t_inv = _symmetrize(Qih @ k.caches.S_inv @ Qih)
    return float(np.trace(G_t @ S_t_inv @ P)) - r


def mpz_mvp(k: IndexKernel, r: int, definitional: bool = False) -> float:
    """Reduced-rank unbiased pseudo-Z index.

    Equals :func:`mpz` when the candidate set is no larger than the rank.
    Otherwise the production path is tr(S T^-1 P) - r with P the oblique
    projector onto the rank-r principal subspace of S Q, obtained through
    the Q^{1/2} similarity; ``definitional=True`` evaluates the defining
    trace over the transformed matrices instead.
    """
    _check_rank(k, r, cap_l=False)
    if k.l <= r:
        return mpz(k)
    T_inv = psd_power(k.T, -1)
    ep = _s_tilde_eigen(k)
    P_sym = _projector_from_pair(ep, r, None)
    if not definitional:
        # oblique projector onto the rank-r principal subspace of S Q,
        # realized through the Q^{1/2} similarity
        P = k.caches.Q_inv_sqrt @ P_sym @ k.caches.Q_sqrt
        return float(np.trace(k.S @ T_inv @ P)) - r
    S_t = _tilde(k, k.S)
    T_t_inv = _symmetrize(k.caches.Q_inv_sqrt @ T_inv @ k.caches.Q_inv_sqrt)
    return float(np.trace(S_t @ T_t_inv @ P_sym)) - r


INDEX_KINDS = ("mai", "mpz", "mai_mvp", "mpz_mvp")


def evaluate(kind: str, k: IndexKernel, r: int) -> float:
    """Evaluate one index kind; the rank is ignored by the full-rank kinds."""
    if kind == "mai":
        return mai(k)
    if kind == "mpz":
        return mpz(k)
    if kind == "mai_mvp":
        return mai_mvp(k, r)
    if kind == "mpz_mvp":
        return mpz_mvp(k, r)
    raise UsageError(f"unknown index kind {kind!r}; expected one of {INDEX_KINDS}")
