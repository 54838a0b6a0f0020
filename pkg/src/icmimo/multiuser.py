"""Multi-user interference constraints: per-user budgets and the sum form."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .bisection import check_ipc_redundant, dual_bounds, iba_solve
from .kkt import kkt_check
from .linalg import HermitianMatrix
from .problem import DualPoint, ProblemInstance, Solution, SolverConfig

__all__ = ["solve_multiuser", "solve_sum_ipc"]


def _pinned_iba(inst: ProblemInstance, cfg: SolverConfig) -> Solution:
    """Cyclic bisection over the constraints that survive the redundancy
    pre-check.

    Constraints whose budget already holds at the water-filling solution
    enter with their dual pinned at zero; after the reduced solve every
    pinned constraint is re-verified and, if violated, released and the
    solve repeated.  The active set only grows, so this terminates in at
    most K rounds.
    """
    redundant = check_ipc_redundant(inst, cfg.rank_tol)
    active = [k for k in range(inst.K) if not redundant[k]]
    total_iters = 0
    while True:
        if not active:
            from .closed_forms import wf_solution

            return wf_solution(inst, cfg)
        sub = ProblemInstance(
            inst.W1,
            [inst.constraints[k] for k in active],
            inst.P_T,
        )
        inner = iba_solve(sub, cfg)
        total_iters += inner.iterations
        R = inner.covariance.mat
        violated = [
            k
            for k in range(inst.K)
            if k not in active
            and float(np.trace(inst.constraints[k].W2.mat @ R).real)
            > inst.constraints[k].P_I + cfg.epsilon
        ]
        if not violated:
            break
        active = sorted(active + violated)

    mu2 = np.zeros(inst.K)
    ipc_active = np.zeros(inst.K, dtype=bool)
    for j, k in enumerate(active):
        mu2[k] = inner.duals.mu2[j]
        ipc_active[k] = inner.ipc_active[j]
    p2 = np.array([float(np.trace(c.W2.mat @ R).real) for c in inst.constraints])
    sol = Solution(
        covariance=HermitianMatrix(R),
        capacity_nats=inner.capacity_nats,
        duals=DualPoint(mu1=inner.duals.mu1, mu2=mu2),
        tx_power=inner.tx_power,
        interference_powers=p2,
        tpc_active=inner.tpc_active,
        ipc_active=ipc_active,
        kkt=None,
        iterations=total_iters,
        method="iba",
        converged=inner.converged,
        residual=inner.residual,
        dual_bounds=dual_bounds(inst),
        dual_iterates=inner.dual_iterates,
    )
    return replace(sol, kkt=kkt_check(inst, sol, tol=max(cfg.epsilon, 1e-9)))


def solve_multiuser(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    """Solve with one interference budget per user (K >= 1).

    For K = 1 this is exactly the single-user solve; larger K runs the
    cyclic bisection with per-constraint redundancy pre-checks.
    """
    cfg = cfg or SolverConfig()
    from .solve import solve

    return solve(inst, cfg)


def solve_sum_ipc(inst: ProblemInstance, P_I_total: float, cfg: SolverConfig | None = None) -> Solution:
    """Solve under a total interference budget sum_k tr(W2k R) <= P_I_total.

    Equivalent to a single IPC with the summed Gram, so every single-user
    result applies unchanged.
    """
    cfg = cfg or SolverConfig()
    if inst.K < 1:
        raise ValueError("sum-IPC form needs at least one constraint")
    if P_I_total < 0:
        raise ValueError("total interference budget must be >= 0")
    W2_sum = np.zeros((inst.m, inst.m), dtype=complex)
    for c in inst.constraints:
        W2_sum += c.W2.mat
    merged = ProblemInstance(inst.W1, [(W2_sum, P_I_total)], inst.P_T)
    from .solve import solve

    return solve(merged, cfg)
