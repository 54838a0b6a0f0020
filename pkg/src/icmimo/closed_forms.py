"""Explicit solutions and classification predicates for special cases.

Each solver here either returns a complete Solution (with duals, so it can
be KKT-checked like any other) or None when its preconditions fail, in
which case the caller falls back to the iterative solver.  All strict
applicability inequalities are required to hold with an absolute margin of
1e-12; boundary cases deliberately fall through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bisection import ACTIVITY_TOL, bisect, check_zf_shortcut, dual_bounds
from .kkt import kkt_check
from .linalg import (
    HermitianMatrix,
    eig,
    null_space_contained,
    numerical_rank,
    pinv,
    sqrt_psd,
)
from .problem import (
    DualPoint,
    ProblemInstance,
    Solution,
    SolverConfig,
    ZeroChannelError,
)
from .waterfill import capacity_of, waterfill

__all__ = [
    "Rank1Geometry",
    "CapacityReport",
    "full_rank_tpc",
    "full_rank_ipc",
    "rank1_w2",
    "ipc_only",
    "rank1_w1",
    "rank1_geometry",
    "common_eigv",
    "classify_capacity",
    "capacity_bounds",
    "ipc_alone_capacity",
    "wf_solution",
]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Rank1Geometry:
    """Geometry of the rank-one main channel against the IPC channel.

    gamma_I is the interference-to-signal budget ratio P_I / P_T; gamma_1
    and gamma_2 bracket it to decide which constraint binds; alpha in
    (0, 1] is the power-loss factor of the optimal beamformer (1 means the
    IPC costs nothing).
    """

    gamma_I: float
    gamma_1: float
    gamma_2: float
    alpha: float


@dataclass(frozen=True)
class CapacityReport:
    """Qualitative capacity behaviour of an instance."""

    unbounded_growth: bool
    zero_capacity: bool
    tpc_always_active: bool
    zf_optimal: bool
    rank_w1: int
    rank_w2: tuple[int, ...]


def _build_solution(
    inst: ProblemInstance,
    R: np.ndarray,
    mu1: float,
    mu2,
    method: str,
    cfg: SolverConfig,
    iterations: int = 0,
    bounds=None,
) -> Solution:
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float)) if inst.K else np.zeros(0)
    cov = HermitianMatrix(R)
    cap = capacity_of(cov, inst.W1)
    tx = cov.trace()
    p2 = np.array([float(np.trace(c.W2.mat @ cov.mat).real) for c in inst.constraints])
    if bounds is None:
        try:
            bounds = dual_bounds(inst)
        except ZeroChannelError:
            bounds = None
    if bounds is not None:
        tpc_active = mu1 > ACTIVITY_TOL * bounds.mu1_upper
        thr2 = ACTIVITY_TOL * np.where(np.isfinite(bounds.mu2_upper), bounds.mu2_upper, 1.0)
        ipc_active = mu2 > thr2
    else:
        tpc_active = mu1 > 0
        ipc_active = mu2 > 0
    sol = Solution(
        covariance=cov,
        capacity_nats=cap,
        duals=DualPoint(mu1=float(mu1), mu2=mu2),
        tx_power=tx,
        interference_powers=p2,
        tpc_active=bool(tpc_active),
        ipc_active=ipc_active,
        kkt=None,
        iterations=iterations,
        method=method,
        converged=True,
        residual=0.0,
        dual_bounds=bounds,
    )
    res = kkt_check(inst, sol, tol=max(cfg.epsilon, 1e-9))
    return replace(sol, kkt=res, residual=res.max_violation)


def wf_solution(inst: ProblemInstance, cfg: SolverConfig, method: str = "waterfill") -> Solution:
    """Water-filling packaged as a Solution of the joint problem."""
    wf = waterfill(inst.W1, inst.P_T, cfg.rank_tol)
    mu1 = 1.0 / wf.water_level_inverse
    return _build_solution(
        inst, wf.covariance.mat, mu1, np.zeros(inst.K), method, cfg
    )


def full_rank_tpc(inst: ProblemInstance, tol: float = BOUNDARY_TOL, cfg: SolverConfig | None = None) -> Solution | None:
    """Power-limited full-rank solution (redundant IPC).

    Applies when W1 is invertible and P_T sits strictly inside the window
    in which the full-rank water-filling covariance exists and leaks at
    most P_I.  Then R = (1/mu1) I - W1^-1 with 1/mu1 = (P_T + tr W1^-1)/m.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1:
        return None
    m = inst.m
    d1 = eig(inst.W1)
    if numerical_rank(inst.W1, cfg.rank_tol) != m:
        return None
    lam1 = d1.eigenvalues
    W1inv = (d1.eigenvectors * (1.0 / lam1)) @ d1.eigenvectors.conj().T
    tr_inv = float(np.sum(1.0 / lam1))
    lower = m / lam1[-1] - tr_inv
    c = inst.single()
    tr_w2 = float(np.trace(c.W2.mat).real)
    if tr_w2 > 0:
        upper = (m / tr_w2) * (c.P_I + float(np.trace(c.W2.mat @ W1inv).real)) - tr_inv
    else:
        upper = math.inf
    if not (inst.P_T - lower > tol and upper - inst.P_T > tol):
        return None
    mu1_inv = (inst.P_T + tr_inv) / m
    R = mu1_inv * np.eye(m) - W1inv
    if np.min(np.linalg.eigvalsh(R)) < -tol:
        return None
    return _build_solution(inst, R, 1.0 / mu1_inv, [0.0], "full-rank-tpc", cfg)


def full_rank_ipc(inst: ProblemInstance, tol: float = BOUNDARY_TOL, cfg: SolverConfig | None = None) -> Solution | None:
    """Interference-limited full-rank solution (redundant TPC).

    Needs W1, W2 invertible and P_I strictly inside its validity window;
    then R = (1/mu2) W2^-1 - W1^-1 with 1/mu2 = (P_I + tr(W2 W1^-1))/m.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1:
        return None
    m = inst.m
    c = inst.single()
    if (
        numerical_rank(inst.W1, cfg.rank_tol) != m
        or numerical_rank(c.W2, cfg.rank_tol) != m
    ):
        return None
    d1 = eig(inst.W1)
    W1inv = (d1.eigenvectors * (1.0 / d1.eigenvalues)) @ d1.eigenvectors.conj().T
    d2 = eig(c.W2)
    W2inv = (d2.eigenvectors * (1.0 / d2.eigenvalues)) @ d2.eigenvectors.conj().T
    tr_inv1 = float(np.sum(1.0 / d1.eigenvalues))
    B = c.W2.mat @ W1inv
    tr_B = float(np.trace(B).real)
    # Eigenvalues of W2 W1^-1 via the Hermitian-similar form.
    S2 = sqrt_psd(c.W2).mat
    lam_B = np.linalg.eigvalsh(S2 @ W1inv @ S2)
    lower = m * float(lam_B[-1]) - tr_B
    upper = (m / float(np.sum(1.0 / d2.eigenvalues))) * (inst.P_T + tr_inv1) - tr_B
    if not (c.P_I - lower > tol and upper - c.P_I > tol):
        return None
    mu2_inv = (c.P_I + tr_B) / m
    R = mu2_inv * W2inv - W1inv
    if np.min(np.linalg.eigvalsh(R)) < -tol:
        return None
    return _build_solution(inst, R, 0.0, [1.0 / mu2_inv], "full-rank-ipc", cfg)


def rank1_w2(inst: ProblemInstance, tol: float = BOUNDARY_TOL, cfg: SolverConfig | None = None) -> Solution | None:
    """Full-rank W1 against a rank-one interference channel.

    Case 1 (generous budget): plain water-filling.  Case 2 (both
    constraints active): water-filling minus a partial null-forming
    correction alpha * u2 u2^H along the interference eigenvector, with
    the duals in closed form.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1 or inst.m < 2:
        return None
    m = inst.m
    c = inst.single()
    if (
        numerical_rank(inst.W1, cfg.rank_tol) != m
        or numerical_rank(c.W2, cfg.rank_tol) != 1
    ):
        return None
    d1 = eig(inst.W1)
    W1inv = (d1.eigenvectors * (1.0 / d1.eigenvalues)) @ d1.eigenvectors.conj().T
    tr_inv = float(np.sum(1.0 / d1.eigenvalues))
    lam_top_inv = 1.0 / float(d1.eigenvalues[-1])
    d2 = eig(c.W2)
    lam2 = float(d2.eigenvalues[0])
    u2 = d2.eigenvectors[:, :1]
    q = float((u2.conj().T @ W1inv @ u2).real[0, 0])

    P_I_th = lam2 * (inst.P_T + tr_inv) / m - lam2 * q
    wf_lower = m * lam_top_inv - tr_inv
    if c.P_I - P_I_th > tol and inst.P_T - wf_lower > tol:
        return wf_solution(inst, cfg, method="rank1-w2")

    lower = lam2 * lam_top_inv - lam2 * q
    tpc_lower = m * c.P_I / lam2 + m * q - tr_inv
    if (
        c.P_I - lower > tol
        and P_I_th - c.P_I > tol
        and inst.P_T - tpc_lower > tol
    ):
        mu1 = (m - 1) / (inst.P_T - c.P_I / lam2 - q + tr_inv)
        mu2 = 1.0 / (c.P_I + lam2 * q) - mu1 / lam2
        if mu1 <= 0 or mu2 <= 0:
            return None
        alpha = 1.0 / mu1 - 1.0 / (mu1 + lam2 * mu2)
        R = np.eye(m) / mu1 - W1inv - alpha * (u2 @ u2.conj().T)
        if np.min(np.linalg.eigvalsh(R)) < -1e-10 * max(1.0, 1.0 / mu1):
            return None
        return _build_solution(inst, R, mu1, [mu2], "rank1-w2", cfg)
    return None


def _ipc_only_raw(W1: np.ndarray, W2: np.ndarray, P_I: float, rank_tol: float):
    """Optimal covariance under the IPC alone, for invertible W2.

    Returns (R, mu2, capacity, tx_power) or None when the main channel
    carries nothing.
    """
    S = pinv(sqrt_psd(W2, rank_tol), rank_tol).mat
    B = S @ W1 @ S
    w, V = np.linalg.eigh(B)
    order = np.argsort(-w, kind="stable")
    lam_b = w[order]
    V = V[:, order]
    thr = rank_tol * max(1.0, float(np.max(np.abs(lam_b))) if lam_b.size else 0.0)
    r_max = int(np.count_nonzero(lam_b > thr))
    if r_max == 0:
        return None
    r_plus = 1
    for r in range(1, r_max + 1):
        gap = float(np.sum(np.clip(1.0 / lam_b[r - 1] - 1.0 / lam_b[:r], 0.0, None)))
        if P_I > gap:
            r_plus = r
    mu2 = r_plus / (P_I + float(np.sum(1.0 / lam_b[:r_plus])))
    alloc = 1.0 / mu2 - 1.0 / lam_b[:r_plus]
    Va = V[:, :r_plus]
    R = S @ ((Va * alloc) @ Va.conj().T) @ S
    R = (R + R.conj().T) / 2
    cap = float(np.sum(np.log(lam_b[:r_plus] / mu2)))
    return R, mu2, cap, float(np.trace(R).real)


def ipc_only(inst: ProblemInstance, tol: float = BOUNDARY_TOL, cfg: SolverConfig | None = None) -> Solution | None:
    """Interference-limited solution for invertible W2 (redundant TPC).

    Water-fills the eigenmodes of W2^-1 W1; applicable iff the resulting
    transmit power fits inside P_T.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1:
        return None
    c = inst.single()
    if numerical_rank(c.W2, cfg.rank_tol) != inst.m:
        return None
    out = _ipc_only_raw(inst.W1.mat, c.W2.mat, c.P_I, cfg.rank_tol)
    if out is None:
        return None
    R, mu2, _, tx = out
    if tx > inst.P_T + tol:
        return None
    return _build_solution(inst, R, 0.0, [mu2], "ipc-only", cfg)


def _rank1_w1_full(inst: ProblemInstance, cfg: SolverConfig):
    """Shared worker for rank1_w1 / rank1_geometry."""
    c = inst.single()
    d1 = eig(inst.W1)
    lam1 = float(d1.eigenvalues[0])
    u1 = d1.eigenvectors[:, :1]
    W2 = c.W2.mat
    m = inst.m
    gamma_I = c.P_I / inst.P_T
    gamma_2 = float((u1.conj().T @ W2 @ u1).real[0, 0])

    W2p = pinv(c.W2, cfg.rank_tol).mat
    w = W2p @ u1
    g1 = float((u1.conj().T @ w).real[0, 0])
    g2 = float((w.conj().T @ w).real[0, 0])
    gamma_1 = g1 / g2 if g2 > cfg.rank_tol**2 else 0.0
    # u1 lies in the range of W2 iff the pseudo-inverse projector fixes it.
    in_range = float(np.linalg.norm(W2 @ w - u1)) <= 1e-8

    if gamma_I >= gamma_2 - BOUNDARY_TOL:
        # IPC redundant: beam straight down the main channel.
        R = inst.P_T * (u1 @ u1.conj().T)
        mu1 = lam1 / (1.0 + lam1 * inst.P_T)
        sol = _build_solution(inst, R, mu1, [0.0], "rank1-w1", cfg)
        return sol, Rank1Geometry(gamma_I, gamma_1, gamma_2, 1.0)

    if in_range and gamma_I < gamma_1 - BOUNDARY_TOL:
        # TPC redundant: whitened beamforming along W2^+ u1.
        alpha = gamma_I * g1
        R = c.P_I * (w @ w.conj().T) / g1
        mu2 = 1.0 / (c.P_I + 1.0 / (lam1 * g1))
        sol = _build_solution(inst, R, 0.0, [mu2], "rank1-w1", cfg)
        return sol, Rank1Geometry(gamma_I, gamma_1, gamma_2, alpha)

    # Both constraints active: find the tilt nu = mu2/mu1 that makes the
    # leaked power meet P_I exactly, beamforming along (I + nu W2)^-1 u1.
    I = np.eye(m)

    def leak(nu):
        b = np.linalg.solve(I + nu * W2, u1)
        h2 = float((b.conj().T @ b).real[0, 0])
        return inst.P_T * float((b.conj().T @ W2 @ b).real[0, 0]) / h2 - c.P_I

    hi = 1.0
    while leak(hi) > 0 and hi < 1e18:
        hi *= 8.0
    nu = bisect(leak, 0.0, hi, cfg.delta)
    b = np.linalg.solve(I + nu * W2, u1)
    h1 = float((u1.conj().T @ b).real[0, 0])
    h2 = float((b.conj().T @ b).real[0, 0])
    alpha = h1 * h1 / h2
    R = inst.P_T * (b @ b.conj().T) / h2
    mu1 = 1.0 / (1.0 / (lam1 * h1) + inst.P_T * h1 / h2)
    mu2 = nu * mu1
    sol = _build_solution(inst, R, mu1, [mu2], "rank1-w1", cfg)
    return sol, Rank1Geometry(gamma_I, gamma_1, gamma_2, alpha)


def rank1_w1(inst: ProblemInstance, tol: float = BOUNDARY_TOL, cfg: SolverConfig | None = None) -> Solution:
    """Optimal beamforming for a rank-one main channel.

    Dispatches on the interference-to-signal ratio: generous budgets beam
    along u1, tight ones along the whitened direction W2^+ u1, and the
    middle regime tilts between the two with a scalar bisection on the
    leakage.  The optimal covariance is always rank one.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1:
        raise ValueError("rank1_w1 handles a single IPC")
    if numerical_rank(inst.W1, cfg.rank_tol) != 1:
        raise ValueError("rank1_w1 requires a rank-one W1")
    sol, _ = _rank1_w1_full(inst, cfg)
    return sol


def rank1_geometry(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Rank1Geometry:
    """The (gamma_I, gamma_1, gamma_2, alpha) geometry for rank-one W1."""
    cfg = cfg or SolverConfig()
    if numerical_rank(inst.W1, cfg.rank_tol) != 1:
        raise ValueError("rank1_geometry requires a rank-one W1")
    _, geom = _rank1_w1_full(inst, cfg)
    return geom


def _joint_eigenbasis(W1: np.ndarray, W2: np.ndarray, tol: float):
    """Common eigenbasis of a commuting Hermitian pair, or None.

    Diagonalizes W1, then re-diagonalizes W2 inside each (near-)degenerate
    eigenspace of W1; verifies that W2 really is diagonal in the result.
    """
    norm1 = float(np.linalg.norm(W1))
    norm2 = float(np.linalg.norm(W2))
    comm = float(np.linalg.norm(W1 @ W2 - W2 @ W1))
    if comm > max(tol * norm1 * norm2, 1e-13):
        return None
    d1 = eig(W1)
    lam1 = d1.eigenvalues
    U = d1.eigenvectors.copy()
    scale = max(1.0, float(np.max(np.abs(lam1))))
    cluster_tol = 1e-8 * scale
    i = 0
    while i < lam1.size:
        j = i + 1
        while j < lam1.size and lam1[i] - lam1[j] <= cluster_tol:
            j += 1
        if j - i > 1:
            block = U[:, i:j]
            _, Vb = np.linalg.eigh(block.conj().T @ W2 @ block)
            U[:, i:j] = block @ Vb
        i = j
    L2 = U.conj().T @ W2 @ U
    off = L2 - np.diag(np.diag(L2))
    if float(np.linalg.norm(off)) > max(1e-8 * max(norm2, 1.0), 1e-12):
        return None
    lam2 = np.clip(np.diag(L2).real, 0.0, None)
    lam1 = np.clip(lam1, 0.0, None)
    return U, lam1, lam2


def common_eigv(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution | None:
    """Joint solution when W1 and W2 share eigenvectors.

    The problem separates across the common eigenmodes: mode i receives
    [(mu1 + mu2 lam2i)^-1 - lam1i^-1]_+ (zero whenever the dual weight
    vanishes), and the two duals come from the same alternating bisection
    as the general solver, just on scalars.
    """
    cfg = cfg or SolverConfig()
    if inst.K != 1:
        return None
    c = inst.single()
    basis = _joint_eigenbasis(inst.W1.mat, c.W2.mat, cfg.rank_tol)
    if basis is None:
        return None
    U, lam1, lam2 = basis
    thr1 = cfg.rank_tol * max(1.0, float(np.max(lam1)) if lam1.size else 0.0)
    if np.max(lam1) <= thr1:
        raise ZeroChannelError("W1 is numerically zero")

    def powers(mu1, mu2):
        s = mu1 + mu2 * lam2
        live = (s > 0) & (lam1 > s)
        p = np.where(live, 1.0 / np.where(live, s, 1.0) - 1.0 / np.where(live, lam1, 1.0), 0.0)
        return float(np.sum(p)), float(np.sum(lam2 * p)), p

    bounds = dual_bounds(inst)
    mu1 = 0.0
    mu2 = 0.0
    converged = False
    residual = math.inf
    iters = 0
    for k in range(1, cfg.k_max + 1):
        iters = k
        mu1 = bisect(lambda x: x * (powers(x, mu2)[0] - inst.P_T), 0.0, bounds.mu1_upper, cfg.delta)
        p1, p2, _ = powers(mu1, mu2)
        if k == 1 and p2 <= c.P_I + BOUNDARY_TOL:
            residual = max(abs(mu1 * (p1 - inst.P_T)), max(0.0, p1 - inst.P_T))
            converged = residual <= cfg.epsilon
            break
        if bounds.mu2_upper[0] > 0:
            mu2 = bisect(
                lambda x: x * (powers(mu1, x)[1] - c.P_I), 0.0, bounds.mu2_upper[0], cfg.delta
            )
        p1, p2, _ = powers(mu1, mu2)
        residual = max(
            abs(mu1 * (p1 - inst.P_T)),
            abs(mu2 * (p2 - c.P_I)),
            max(0.0, p1 - inst.P_T),
            max(0.0, p2 - c.P_I),
        )
        if residual <= cfg.epsilon:
            converged = True
            break
    _, _, p = powers(mu1, mu2)
    R = (U * p) @ U.conj().T
    sol = _build_solution(inst, R, mu1, [mu2], "common-eig", cfg, iterations=iters, bounds=bounds)
    if not converged:
        sol = replace(sol, converged=False, residual=residual)
    return sol


def classify_capacity(inst: ProblemInstance, rank_tol: float = 1e-9) -> CapacityReport:
    """Qualitative classification of the instance.

    unbounded_growth: capacity grows without bound in P_T, which happens
    exactly when some direction leaks nothing yet excites the main
    channel.  zero_capacity: the zero-budget constraints force zero rate.
    tpc_always_active: same null-space condition as unbounded growth.
    """
    m = inst.m
    G_sum = np.zeros((m, m), dtype=complex)
    G_zero = np.zeros((m, m), dtype=complex)
    for c in inst.constraints:
        G_sum += c.W2.mat
        if c.P_I == 0.0:
            G_zero += c.W2.mat
    growth = not null_space_contained(G_sum, inst.W1.mat, rank_tol)
    zero_cap = null_space_contained(G_zero, inst.W1.mat, rank_tol) and (
        any(c.P_I == 0.0 for c in inst.constraints) or numerical_rank(inst.W1, rank_tol) == 0
    )
    return CapacityReport(
        unbounded_growth=growth,
        zero_capacity=zero_cap,
        tpc_always_active=growth,
        zf_optimal=check_zf_shortcut(inst, rank_tol),
        rank_w1=numerical_rank(inst.W1, rank_tol),
        rank_w2=tuple(numerical_rank(c.W2, rank_tol) for c in inst.constraints),
    )


def ipc_alone_capacity(inst: ProblemInstance, cfg: SolverConfig | None = None) -> float:
    """Capacity with the transmit power constraint removed.

    Infinite when some zero-leakage direction excites the main channel;
    otherwise computed on the range of the combined IPC Gram, where the
    problem is a genuine interference-limited one.
    """
    cfg = cfg or SolverConfig()
    m = inst.m
    if inst.K == 0:
        return math.inf if numerical_rank(inst.W1, cfg.rank_tol) > 0 else 0.0
    G_sum = np.zeros((m, m), dtype=complex)
    for c in inst.constraints:
        G_sum += c.W2.mat
    if not null_space_contained(G_sum, inst.W1.mat, cfg.rank_tol):
        return math.inf
    d = eig(G_sum)
    thr = cfg.rank_tol * max(1.0, float(np.max(np.abs(d.eigenvalues))) if d.eigenvalues.size else 0.0)
    keep = d.eigenvalues > thr
    if not np.any(keep):
        return 0.0
    U = d.eigenvectors[:, keep]
    W1p = U.conj().T @ inst.W1.mat @ U
    if inst.K == 1:
        out = _ipc_only_raw(W1p, U.conj().T @ inst.constraints[0].W2.mat @ U,
                            inst.constraints[0].P_I, cfg.rank_tol)
        return 0.0 if out is None else out[2]
    # Multiple IPCs: solve on the projected space with a transmit budget
    # provably larger than any feasible trace there.
    lam_min_pos = float(np.min(d.eigenvalues[keep]))
    big_PT = sum(c.P_I for c in inst.constraints) / lam_min_pos + 1.0
    if not math.isfinite(big_PT):
        return math.inf
    sub = ProblemInstance(
        W1p,
        [(U.conj().T @ c.W2.mat @ U, c.P_I) for c in inst.constraints],
        big_PT,
    )
    from .solve import solve

    return solve(sub, cfg).capacity_nats


def capacity_bounds(inst: ProblemInstance, cfg: SolverConfig | None = None) -> tuple[float, float, float]:
    """(C, C_WF, C_IPC): the joint capacity and its two single-constraint
    upper bounds.  C <= min(C_WF, C_IPC), with equality outside the
    jointly-constrained window."""
    cfg = cfg or SolverConfig()
    from .solve import solve

    C = solve(inst, cfg).capacity_nats
    C_wf = waterfill(inst.W1, inst.P_T, cfg.rank_tol).capacity_nats
    C_ipc = ipc_alone_capacity(inst, cfg)
    return C, C_wf, C_ipc
