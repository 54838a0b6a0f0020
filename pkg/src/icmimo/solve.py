"""Dispatching solver: closed forms where they apply, bisection otherwise.

Dispatch order (each earlier path is exact and cheaper): degenerate
channels and zero-budget constraints, the zero-forcing shortcut, the
IPC-redundancy test against plain water-filling, the commuting case, the
rank-one main channel, the interference-limited closed form, the
full-rank closed forms, and finally the iterative bisection algorithm.
"""

from __future__ import annotations

import numpy as np

from . import closed_forms as cf
from .bisection import check_ipc_redundant, check_zf_shortcut, iba_solve
from .kkt import kkt_check
from .linalg import HermitianMatrix, eig, numerical_rank
from .problem import DualPoint, ProblemInstance, Solution, SolverConfig

__all__ = ["solve"]


def _zero_capacity_solution(inst: ProblemInstance, cfg: SolverConfig) -> Solution:
    m = inst.m
    R = np.zeros((m, m), dtype=complex)
    sol = Solution(
        covariance=HermitianMatrix(R),
        capacity_nats=0.0,
        duals=DualPoint(mu1=0.0, mu2=np.zeros(inst.K)),
        tx_power=0.0,
        interference_powers=np.zeros(inst.K),
        tpc_active=False,
        ipc_active=np.zeros(inst.K, dtype=bool),
        kkt=None,
        iterations=0,
        method="zero-capacity",
        converged=True,
        residual=0.0,
    )
    from dataclasses import replace

    return replace(sol, kkt=kkt_check(inst, sol, tol=max(cfg.epsilon, 1e-9)))


def _zf_projection(inst: ProblemInstance, cfg: SolverConfig) -> Solution:
    """Zero-budget constraints force signaling into their joint null space.

    Projects the problem there, solves the reduced instance, and lifts the
    covariance back; a vanishing projected main channel means zero rate.
    """
    m = inst.m
    zero_idx = [k for k, c in enumerate(inst.constraints) if c.P_I == 0.0]
    G = np.zeros((m, m), dtype=complex)
    for k in zero_idx:
        G += inst.constraints[k].W2.mat
    d = eig(G)
    thr = cfg.rank_tol * max(1.0, float(np.max(np.abs(d.eigenvalues))))
    N = d.eigenvectors[:, np.abs(d.eigenvalues) <= thr]
    if N.shape[1] == 0:
        return _zero_capacity_solution(inst, cfg)
    W1p = N.conj().T @ inst.W1.mat @ N
    if numerical_rank(W1p, cfg.rank_tol) == 0:
        return _zero_capacity_solution(inst, cfg)
    keep_idx = [k for k in range(inst.K) if k not in zero_idx]
    sub = ProblemInstance(
        W1p,
        [(N.conj().T @ inst.constraints[k].W2.mat @ N, inst.constraints[k].P_I) for k in keep_idx],
        inst.P_T,
    )
    inner = solve(sub, cfg)
    R = N @ inner.covariance.mat @ N.conj().T
    mu2 = np.zeros(inst.K)
    for j, k in enumerate(keep_idx):
        mu2[k] = inner.duals.mu2[j]
    p2 = np.array([float(np.trace(c.W2.mat @ R).real) for c in inst.constraints])
    sol = Solution(
        covariance=HermitianMatrix(R),
        capacity_nats=inner.capacity_nats,
        duals=DualPoint(mu1=inner.duals.mu1, mu2=mu2),
        tx_power=float(np.trace(R).real),
        interference_powers=p2,
        tpc_active=inner.tpc_active,
        ipc_active=np.array(
            [False if k in zero_idx else bool(inner.ipc_active[keep_idx.index(k)]) for k in range(inst.K)]
        ),
        kkt=None,
        iterations=inner.iterations,
        method="zf-projection",
        converged=inner.converged,
        residual=inner.residual,
    )
    from dataclasses import replace

    return replace(sol, kkt=kkt_check(inst, sol, tol=max(cfg.epsilon, 1e-9)))


def solve(inst: ProblemInstance, cfg: SolverConfig | None = None, method: str = "auto") -> Solution:
    """Capacity and optimal covariance under the TPC and all IPCs.

    method='auto' dispatches through the closed forms; method='iba'
    forces the iterative bisection algorithm (useful for cross-checks).
    """
    cfg = cfg or SolverConfig()
    if method == "iba":
        return iba_solve(inst, cfg)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")

    if numerical_rank(inst.W1, cfg.rank_tol) == 0:
        return _zero_capacity_solution(inst, cfg)
    if any(c.P_I == 0.0 and numerical_rank(c.W2, cfg.rank_tol) > 0 for c in inst.constraints):
        return _zf_projection(inst, cfg)
    if inst.K == 0 or check_zf_shortcut(inst, cfg.rank_tol):
        return cf.wf_solution(inst, cfg)
    if np.all(check_ipc_redundant(inst, cfg.rank_tol)):
        return cf.wf_solution(inst, cfg)

    if inst.K == 1:
        sol = cf.common_eigv(inst, cfg)
        if sol is not None:
            return sol
        if numerical_rank(inst.W1, cfg.rank_tol) == 1:
            return cf.rank1_w1(inst, cfg=cfg)
        for attempt in (cf.ipc_only, cf.full_rank_tpc, cf.full_rank_ipc, cf.rank1_w2):
            sol = attempt(inst, cfg=cfg)
            if sol is not None:
                return sol
        return iba_solve(inst, cfg)

    from .multiuser import _pinned_iba

    return _pinned_iba(inst, cfg)
