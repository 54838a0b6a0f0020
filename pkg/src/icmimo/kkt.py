"""Covariance, capacity and powers as functions of the dual variables.

For duals (mu1, mu2) the Lagrangian-optimal covariance is

    R(mu) = Wmu^+ (I - Wmu W1^-1 Wmu)_+ Wmu^+ ,   Wmu = (mu1 I + sum mu2k W2k)^(1/2)

computed through the change of variables Wt = Wmu^-1 W1 Wmu^-1: keep the
eigenmodes of Wt above 1, allocate 1 - 1/lam on each, transform back.  When
mu1 vanishes and the combined IPC Gram is rank-deficient, everything is
projected onto the range of the Gram and the off-range blocks are set to
zero, which picks the minimum-trace member of the optimal set.
"""

from __future__ import annotations

import numpy as np

from .linalg import HermitianMatrix, as_matrix, eig, sqrt_psd
from .problem import DegenerateDualError, DualPoint, KKTResiduals, ProblemInstance, Solution

__all__ = [
    "DualEvaluator",
    "covariance_from_duals",
    "capacity_from_duals",
    "powers_from_duals",
    "kkt_check",
]


class DualEvaluator:
    """Per-instance evaluator of R(mu1, mu2) and derived quantities.

    For a single IPC the Gram mu1 I + mu2 W2 shares the eigenbasis of W2
    for every dual point, so the instance is diagonalized once and each
    evaluation costs a single m x m eigendecomposition.
    """

    def __init__(self, inst: ProblemInstance, rank_tol: float = 1e-9):
        self.inst = inst
        self.rank_tol = rank_tol
        self.m = inst.m
        self.K = inst.K
        self._w1 = inst.W1.mat
        self._w2 = inst.W2_list
        if self.K == 1:
            d2 = eig(self._w2[0])
            self._lam2 = d2.eigenvalues
            self._u2 = d2.eigenvectors
            self._w1_in_u2 = self._u2.conj().T @ self._w1 @ self._u2

    def _basis(self, mu1: float, mu2: np.ndarray):
        """Eigenbasis of the dual Gram mu1 I + sum mu2k W2k.

        Returns (gram eigenvalues, basis U, W1 expressed in U, per-IPC
        Grams expressed in U or None for the single-IPC fast path).
        """
        if self.K == 1:
            g = mu1 + mu2[0] * self._lam2
            return g, self._u2, self._w1_in_u2, None
        G = mu1 * np.eye(self.m, dtype=complex)
        for mk, W2k in zip(mu2, self._w2):
            if mk != 0.0:
                G = G + mk * W2k
        d = eig(G)
        U = d.eigenvectors
        w1u = U.conj().T @ self._w1 @ U
        w2u = [U.conj().T @ W2k @ U for W2k in self._w2]
        return d.eigenvalues, U, w1u, w2u

    def evaluate(self, mu1: float, mu2, want_matrix: bool = False):
        """Allocation at a dual point.

        Returns (capacity, tx_power, interference powers, R or None).
        R, when requested, is in the original basis.
        """
        mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
        g, U, w1u, w2u = self._basis(mu1, mu2)
        top = float(np.max(g)) if g.size else 0.0
        if top <= 0.0:
            raise DegenerateDualError(
                "all duals are zero and the combined IPC Gram vanishes"
            )
        keep = g > self.rank_tol * top
        gk = g[keep]
        d_inv = 1.0 / np.sqrt(gk)
        Wt = w1u[np.ix_(keep, keep)] * np.outer(d_inv, d_inv)
        lt, Vt = np.linalg.eigh(Wt)
        act = lt > 1.0
        cap = float(np.sum(np.log(lt[act]))) if np.any(act) else 0.0
        if not np.any(act):
            r = keep.sum()
            Rc = np.zeros((r, r), dtype=complex)
        else:
            alloc = 1.0 - 1.0 / lt[act]
            Va = Vt[:, act]
            Rc = ((Va * alloc) @ Va.conj().T) * np.outer(d_inv, d_inv)
        tx = float(np.trace(Rc).real)
        if self.K == 1:
            p2 = np.array([float(np.sum(self._lam2[keep] * np.diag(Rc).real))])
        else:
            p2 = np.array(
                [float(np.trace(W2u[np.ix_(keep, keep)] @ Rc).real) for W2u in w2u]
            )
        R = None
        if want_matrix:
            Uk = U[:, keep]
            R = Uk @ Rc @ Uk.conj().T
        return cap, tx, p2, R

    def covariance(self, mu1: float, mu2) -> np.ndarray:
        return self.evaluate(mu1, mu2, want_matrix=True)[3]

    def powers(self, mu1: float, mu2) -> tuple[float, np.ndarray]:
        _, tx, p2, _ = self.evaluate(mu1, mu2)
        return tx, p2

    def capacity(self, mu1: float, mu2) -> float:
        return self.evaluate(mu1, mu2)[0]


def _as_dual(d, K: int) -> DualPoint:
    if isinstance(d, DualPoint):
        dual = d
    else:
        mu1, mu2 = d
        dual = DualPoint(mu1=float(mu1), mu2=np.asarray(mu2, dtype=float))
    if dual.mu2.size != K:
        raise ValueError(f"expected {K} IPC duals, got {dual.mu2.size}")
    return dual


def covariance_from_duals(inst: ProblemInstance, d, tol: float = 1e-9) -> HermitianMatrix:
    """Lagrangian-optimal covariance R(mu) for the given duals."""
    dual = _as_dual(d, inst.K)
    R = DualEvaluator(inst, rank_tol=tol).covariance(dual.mu1, dual.mu2)
    return HermitianMatrix(R)


def capacity_from_duals(inst: ProblemInstance, d, tol: float = 1e-9) -> float:
    """Capacity at a dual point: sum of log lam over eigenvalues lam > 1
    of Wmu^+ W1 Wmu^+.  Agrees with capacity_of(covariance_from_duals(...))."""
    dual = _as_dual(d, inst.K)
    return DualEvaluator(inst, rank_tol=tol).capacity(dual.mu1, dual.mu2)


def powers_from_duals(inst: ProblemInstance, d, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Transmit power tr(R(mu)) and interference powers tr(W2k R(mu))."""
    dual = _as_dual(d, inst.K)
    return DualEvaluator(inst, rank_tol=tol).powers(dual.mu1, dual.mu2)


def kkt_check(inst: ProblemInstance, sol: Solution, tol: float = 1e-8) -> KKTResiduals:
    """Residuals of the optimality conditions at a candidate solution.

    Reports how far the implied multiplier M = mu1 I + sum mu2k W2k -
    (I + W1 R)^-1 W1 is from being PSD and from annihilating R, the
    complementary-slackness products, and the feasibility gaps.  Always
    returns (diagnostic); ``passed`` is max violation <= tol.

    Note: when some P_Ik = 0 the problem has no strictly feasible point and
    exact finite multipliers need not exist, so the stationarity entries
    are informative only in that case.
    """
    R = as_matrix(sol.covariance)
    mu1 = sol.duals.mu1
    mu2 = sol.duals.mu2
    m = inst.m
    Q = sqrt_psd(inst.W1.mat).mat
    grad = Q @ np.linalg.solve(np.eye(m) + Q @ R @ Q, Q)
    M = mu1 * np.eye(m, dtype=complex) - grad
    for mk, W2k in zip(mu2, inst.W2_list):
        M = M + mk * W2k
    M = (M + M.conj().T) / 2
    w_m = np.linalg.eigvalsh(M)
    m_neg = float(max(0.0, -w_m[0]))
    mr = float(np.linalg.norm(M @ R, 2))
    trR = float(np.trace(R).real)
    p2 = np.array([float(np.trace(W2k @ R).real) for W2k in inst.W2_list])
    slack_tpc = abs(mu1 * (trR - inst.P_T))
    slack_ipc = np.abs(mu2 * (p2 - inst.P_I)) if inst.K else np.zeros(0)
    feas_tpc = max(0.0, trR - inst.P_T)
    feas_ipc = np.clip(p2 - inst.P_I, 0.0, None) if inst.K else np.zeros(0)
    w_r = np.linalg.eigvalsh(R)
    feas_psd = float(max(0.0, -w_r[0]))
    worst = max(
        m_neg, mr, slack_tpc, feas_tpc, feas_psd,
        float(np.max(slack_ipc)) if slack_ipc.size else 0.0,
        float(np.max(feas_ipc)) if feas_ipc.size else 0.0,
    )
    return KKTResiduals(
        m_neg_eigenvalue=m_neg,
        m_dot_r_norm=mr,
        slack_tpc=slack_tpc,
        slack_ipc=slack_ipc,
        feas_tpc=feas_tpc,
        feas_ipc=feas_ipc,
        feas_psd=feas_psd,
        passed=worst <= tol,
    )
