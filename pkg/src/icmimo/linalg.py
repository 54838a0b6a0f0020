"""Hermitian / positive-semidefinite linear algebra primitives.

Everything downstream (water-filling, the dual-to-covariance map, the
closed-form solutions) is built on eigendecompositions of Hermitian
matrices, with a single relative rank tolerance controlling what counts
as a zero eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-9

__all__ = [
    "RANK_TOL",
    "HermitianMatrix",
    "EigenDecomposition",
    "hermitianize",
    "eig",
    "psd_part",
    "pinv",
    "sqrt_psd",
    "numerical_rank",
    "null_space_contained",
    "spectral_norm",
]


def hermitianize(A: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (A + A^H) / 2 as a complex array."""
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2


def as_matrix(A) -> np.ndarray:
    """Unwrap a HermitianMatrix (or pass through an ndarray) as complex."""
    if isinstance(A, HermitianMatrix):
        return A.mat
    return np.asarray(A, dtype=complex)


class HermitianMatrix:
    """Dense complex square matrix with Hermitian symmetry enforced.

    Symmetry is enforced on construction by averaging with the conjugate
    transpose, so downstream eigensolvers never see asymmetric drift.
    The stored array is immutable.
    """

    __slots__ = ("_mat",)

    def __init__(self, entries):
        A = np.asarray(as_matrix(entries))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        if A.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(A)):
            raise ValueError("matrix entries must be finite")
        A = hermitianize(A)
        A.setflags(write=False)
        self._mat = A

    @classmethod
    def from_channel(cls, H) -> "HermitianMatrix":
        """Gram matrix H^H H of a (possibly rectangular) channel matrix."""
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2:
            raise ValueError("channel matrix must be 2-dimensional")
        return cls(H.conj().T @ H)

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def m(self) -> int:
        return self._mat.shape[0]

    def trace(self) -> float:
        return float(np.trace(self._mat).real)

    def norm(self) -> float:
        """Spectral norm (largest absolute eigenvalue)."""
        return spectral_norm(self._mat)

    def __repr__(self):
        return f"HermitianMatrix(m={self.m})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.

    Column i of ``eigenvectors`` is paired with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eig(A) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Ties are kept in the (ascending) LAPACK output order, which makes the
    ordering deterministic for repeated eigenvalues.

    Raises numpy.linalg.LinAlgError if the decomposition does not converge.
    """
    M = as_matrix(A)
    w, V = np.linalg.eigh(hermitianize(M))
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=V[:, order])


def _rank_threshold(eigenvalues: np.ndarray, tol: float) -> float:
    top = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
    return tol * max(1.0, top)


def psd_part(A, tol: float = RANK_TOL) -> HermitianMatrix:
    """Positive part: keep eigenmodes above the rank tolerance, zero the rest.

    Returns sum of lam_i * u_i u_i^H over eigenvalues lam_i > tol * scale.
    The result is PSD and commutes with A.
    """
    d = eig(A)
    thr = _rank_threshold(d.eigenvalues, tol)
    keep = d.eigenvalues > thr
    U = d.eigenvectors[:, keep]
    return HermitianMatrix((U * d.eigenvalues[keep]) @ U.conj().T)


def pinv(A, tol: float = RANK_TOL) -> HermitianMatrix:
    """Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.

    Eigenvalues above tol * lam_max are inverted, the rest are zeroed;
    the eigenvectors are unchanged.
    """
    d = eig(A)
    thr = tol * max(d.eigenvalues[0], 0.0) if d.eigenvalues.size else 0.0
    inv = np.where(d.eigenvalues > thr, 1.0 / np.where(d.eigenvalues > thr, d.eigenvalues, 1.0), 0.0)
    U = d.eigenvectors
    return HermitianMatrix((U * inv) @ U.conj().T)


def sqrt_psd(A, tol: float = RANK_TOL) -> HermitianMatrix:
    """Principal square root of a PSD matrix.

    Eigenvalues within -tol * scale of zero are clipped to zero; anything
    more negative raises ValueError.
    """
    d = eig(A)
    thr = _rank_threshold(d.eigenvalues, tol)
    if d.eigenvalues.size and d.eigenvalues[-1] < -thr:
        raise ValueError(
            f"matrix is not PSD: smallest eigenvalue {d.eigenvalues[-1]:.3e}"
        )
    vals = np.sqrt(np.clip(d.eigenvalues, 0.0, None))
    U = d.eigenvectors
    return HermitianMatrix((U * vals) @ U.conj().T)


def numerical_rank(A, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues with |lam_i| > tol * max(1, |lam_1|)."""
    w = np.linalg.eigvalsh(as_matrix(A))
    thr = _rank_threshold(w, tol)
    return int(np.count_nonzero(np.abs(w) > thr))


def null_space_contained(A, B, tol: float = RANK_TOL) -> bool:
    """Whether the (numerical) null space of A is contained in that of B.

    True iff every eigenvector u of A with eigenvalue below the rank
    threshold satisfies ||B u|| <= tol * (1 + ||B||).  A full-rank A has an
    empty null space and the containment holds vacuously.
    """
    Am = as_matrix(A)
    Bm = as_matrix(B)
    if Am.shape != Bm.shape:
        raise ValueError(f"dimension mismatch: {Am.shape} vs {Bm.shape}")
    d = eig(Am)
    thr = _rank_threshold(d.eigenvalues, tol)
    null_vecs = d.eigenvectors[:, np.abs(d.eigenvalues) <= thr]
    if null_vecs.shape[1] == 0:
        return True
    bound = tol * (1.0 + spectral_norm(Bm))
    residuals = np.linalg.norm(Bm @ null_vecs, axis=0)
    return bool(np.all(residuals <= bound))


def spectral_norm(A) -> float:
    """Spectral norm of a Hermitian matrix via its eigenvalues."""
    w = np.linalg.eigvalsh(as_matrix(A))
    return float(np.max(np.abs(w))) if w.size else 0.0
