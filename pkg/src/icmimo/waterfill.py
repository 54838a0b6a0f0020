"""Standard water-filling under the total power constraint only.

This is the baseline the interference-constrained solver falls back to
whenever the interference constraints turn out to be redundant, and the
reference used by the redundancy tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import RANK_TOL, HermitianMatrix, as_matrix, eig, sqrt_psd
from .problem import ZeroChannelError

__all__ = ["WaterfillResult", "waterfill", "capacity_of", "waterfill_levels"]


@dataclass(frozen=True)
class WaterfillResult:
    """Water-filling covariance with its water level and capacity."""

    covariance: HermitianMatrix
    water_level_inverse: float
    active_modes: int
    capacity_nats: float


def waterfill_levels(gains: np.ndarray, P_T: float) -> tuple[float, int]:
    """Water level for parallel channels with the given positive gains.

    Exact active-set sweep: sort gains descending and find the largest
    mode count k whose common water level 1/mu = (P_T + sum_{i<=k} 1/g_i)/k
    still clears 1/g_k.  Returns (1/mu, k).
    """
    g = np.sort(np.asarray(gains, dtype=float))[::-1]
    if g.size == 0 or g[0] <= 0:
        raise ZeroChannelError("no positive channel gains to fill")
    g = g[g > 0]
    inv = 1.0 / g
    cum = np.cumsum(inv)
    ks = np.arange(1, g.size + 1)
    levels = (P_T + cum) / ks
    ok = levels > inv
    k = int(np.max(ks[ok]))
    return float(levels[k - 1]), k


def waterfill(W1, P_T: float, rank_tol: float = RANK_TOL) -> WaterfillResult:
    """Capacity-achieving covariance under tr(R) <= P_T alone.

    Power goes on the eigenmodes of W1: R = sum_{i: g_i > mu} (1/mu - 1/g_i)
    u_i u_i^H with the water level chosen so the trace meets P_T exactly.

    Raises ZeroChannelError if W1 is numerically zero and ValueError for a
    non-positive budget.
    """
    if not (P_T > 0):
        raise ValueError(f"P_T must be > 0, got {P_T}")
    d = eig(W1)
    scale = float(np.max(np.abs(d.eigenvalues))) if d.eigenvalues.size else 0.0
    thr = rank_tol * max(1.0, scale)
    if scale <= thr:
        raise ZeroChannelError("W1 is numerically zero")
    pos = d.eigenvalues > thr
    gains = d.eigenvalues[pos]
    level, k = waterfill_levels(gains, P_T)
    alloc = np.clip(level - 1.0 / gains, 0.0, None)
    alloc[k:] = 0.0
    U = d.eigenvectors[:, pos]
    R = HermitianMatrix((U * alloc) @ U.conj().T)
    cap = float(np.sum(np.log(gains[:k] * level)))
    return WaterfillResult(
        covariance=R,
        water_level_inverse=level,
        active_modes=k,
        capacity_nats=cap,
    )


def capacity_of(R, W1) -> float:
    """Mutual information log|I + W1 R| in nats.

    Evaluated through the eigenvalues of the symmetrized product
    W1^(1/2) R W1^(1/2), which stays accurate at high SNR where a raw
    determinant would lose significance.
    """
    Rm = as_matrix(R)
    Wm = as_matrix(W1)
    if Rm.shape != Wm.shape:
        raise ValueError(f"dimension mismatch: {Rm.shape} vs {Wm.shape}")
    Q = sqrt_psd(Wm).mat
    w = np.linalg.eigvalsh(Q @ Rm @ Q)
    return float(np.sum(np.log1p(np.clip(w, 0.0, None))))
