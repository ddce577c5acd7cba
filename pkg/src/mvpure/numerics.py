"""Deterministic symmetric/PSD linear-algebra primitives.

Everything downstream (index kernels, spatial filters, spectra) is built
on four operations: a sign-deterministic symmetric eigendecomposition,
PSD matrix powers, and orthogonal/oblique principal-subspace projectors.
Eigenvalues of nonsymmetric products are never computed directly; callers
are expected to pass a symmetrizing similarity instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateGap,
    NotPositiveDefinite,
    NotSimilarizable,
    NotSymmetric,
    RankOutOfRange,
)

#: Relative entrywise tolerance for the symmetry precondition of sym_eig.
SYM_TOL = 1e-8

#: psd_power treats eigenvalues below ``PSD_EPS * lambda_max`` as zero/invalid.
PSD_EPS = 1e-10

#: Relative eigenvalue-gap guard for rank-r projectors.
GAP_EPS = 1e-12


def _as_square(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be square and non-empty, got shape {A.shape}")
    return A


def _symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigendecomposition of a symmetric matrix.

    ``values`` are sorted non-increasing and ``vectors[:, i]`` is the unit
    eigenvector paired with ``values[i]``.  The sign of each eigenvector is
    fixed so that its first component of non-negligible magnitude is
    positive, which makes repeated decompositions byte-reproducible.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values.flags.writeable = False
        self.vectors.flags.writeable = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return V diag(values) V^T."""
        return (self.vectors * self.values) @ self.vectors.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so the first non-negligible component is positive."""
    V = vectors.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        nz = np.nonzero(np.abs(col) > 1e-12 * scale)[0]
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def sym_eig(A: np.ndarray, *, sym_tol: float = SYM_TOL) -> EigenPair:
    """Eigendecompose a symmetric matrix with descending eigenvalues.

    Parameters
    ----------
    A:
        Symmetric n x n matrix.  Entrywise asymmetry above
        ``sym_tol * max|A|`` raises :class:`NotSymmetric`.
    sym_tol:
        Relative symmetry tolerance.

    Returns
    -------
    EigenPair
        Descending eigenvalues and sign-fixed orthonormal eigenvectors.
    """
    A = _as_square(A, "A")
    scale = np.max(np.abs(A))
    asym = np.max(np.abs(A - A.T))
    if scale > 0 and asym > sym_tol * scale:
        raise NotSymmetric(
            f"matrix is not symmetric: max|A - A^T| = {asym:.3e} "
            f"exceeds {sym_tol:.1e} * max|A| = {sym_tol * scale:.3e}"
        )
    try:
        vals, vecs = np.linalg.eigh(_symmetrize(A))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"symmetric eigendecomposition failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = _fix_signs(vecs[:, order])
    return EigenPair(values=vals, vectors=vecs)


def psd_power(
    A: np.ndarray, p: float, *, eps_psd: float | None = None, sym_tol: float = SYM_TOL
) -> np.ndarray:
    """Matrix power of a symmetric PSD matrix via its eigendecomposition.

    Supports p in {1/2, -1/2, -1}.  For negative powers all eigenvalues
    must exceed ``eps_psd`` (default ``PSD_EPS * lambda_max``); for the
    square root, eigenvalues within ``eps_psd`` of zero are clamped to
    zero and anything more negative raises :class:`NotPositiveDefinite`.
    """
    if p not in (0.5, -0.5, -1.0, -1):
        raise ValueError(f"unsupported power {p}; expected one of 1/2, -1/2, -1")
    ep = sym_eig(A, sym_tol=sym_tol)
    lam_max = float(ep.values[0])
    eps = eps_psd if eps_psd is not None else PSD_EPS * max(lam_max, 0.0)
    lam_min = float(ep.values[-1])
    if p < 0:
        if lam_min <= eps:
            raise NotPositiveDefinite(
                "matrix is not positive definite for a negative power",
                smallest_eigenvalue=lam_min,
            )
        powered = ep.values**p
    else:
        if lam_min < -eps:
            raise NotPositiveDefinite(
                "matrix has a negative eigenvalue; square root undefined",
                smallest_eigenvalue=lam_min,
            )
        powered = np.sqrt(np.clip(ep.values, 0.0, None))
    return _symmetrize((ep.vectors * powered) @ ep.vectors.T)


def _projector_from_pair(ep: EigenPair, r: int, eps_gap: float | None) -> np.ndarray:
    """Rank-r spectral projector from a descending EigenPair, with gap guard."""
    n = ep.n
    if not 1 <= r <= n:
        raise RankOutOfRange(f"rank {r} out of range [1, {n}]")
    if r == n:
        return np.eye(n)
    guard = eps_gap if eps_gap is not None else GAP_EPS * max(float(ep.values[0]), 0.0)
    gap = float(ep.values[r - 1] - ep.values[r])
    if gap <= guard:
        raise DegenerateGap(
            f"eigenvalue gap at rank {r} is {gap:.3e} (guard {guard:.3e}); "
            "the rank-r principal subspace is ill-defined"
        )
    Vr = ep.vectors[:, :r]
    return _symmetrize(Vr @ Vr.T)


def top_r_orth_projector(
    A: np.ndarray, r: int, *, eps_gap: float | None = None, sym_tol: float = SYM_TOL
) -> np.ndarray:
    """Orthogonal projector onto the span of A's top-r eigenvectors.

    ``A`` must be symmetric PSD.  When ``r < n`` the eigenvalue gap
    ``lambda_r - lambda_{r+1}`` must exceed ``eps_gap`` (default
    ``GAP_EPS * lambda_1``), otherwise :class:`DegenerateGap` is raised.
    ``r == n`` returns the exact identity.
    """
    return _projector_from_pair(sym_eig(A, sym_tol=sym_tol), r, eps_gap)


def top_r_oblique_projector(
    M: np.ndarray,
    r: int,
    *,
    sym_factor: np.ndarray | None = None,
    sym_sqrt: np.ndarray | None = None,
    sym_inv_sqrt: np.ndarray | None = None,
    eps_gap: float | None = None,
) -> np.ndarray:
    """Oblique projector onto the principal subspace of a similarized matrix.

    ``M`` must satisfy ``F^{1/2} M F^{-1/2} = symmetric`` for the supplied
    SPD factor ``F`` (``sym_factor``), i.e. M has a real spectrum realized
    through that similarity.  Callers may pass precomputed ``sym_sqrt`` /
    ``sym_inv_sqrt`` to skip the factor's eigendecomposition.  With no
    factor, ``M`` itself must be symmetric and the result coincides with
    :func:`top_r_orth_projector`.

    The returned P satisfies P @ P = P and P @ M = M @ P (within roundoff)
    and has trace r.
    """
    M = _as_square(M, "M")
    n = M.shape[0]
    if (sym_sqrt is None) != (sym_inv_sqrt is None):
        raise ValueError("pass both sym_sqrt and sym_inv_sqrt or neither")
    if sym_sqrt is None:
        if sym_factor is None:
            Fh = Fih = np.eye(n)
        else:
            try:
                Fh = psd_power(sym_factor, 0.5)
                Fih = psd_power(sym_factor, -0.5)
            except (NotPositiveDefinite, NotSymmetric) as exc:
                raise NotSimilarizable(f"symmetrizing factor rejected: {exc}") from exc
    else:
        Fh = np.asarray(sym_sqrt, dtype=np.float64)
        Fih = np.asarray(sym_inv_sqrt, dtype=np.float64)
    A = Fh @ M @ Fih
    scale = max(np.max(np.abs(A)), 1e-300)
    asym = np.max(np.abs(A - A.T))
    if asym > 1e-7 * scale:
        raise NotSimilarizable(
            f"similarity did not symmetrize the matrix (residual {asym:.3e}, "
            f"scale {scale:.3e}); wrong symmetrizing factor?"
        )
    P_sym = _projector_from_pair(sym_eig(_symmetrize(A)), r, eps_gap)
    return Fih @ P_sym @ Fh
