"""Scalar bisection and the iterative bisection algorithm for the duals.

The outer solver alternates one-dimensional bisections: zero
f1(mu1) = mu1 (tr R(mu) - P_T) at fixed mu2, then cyclically zero each
f2k(mu2k) = mu2k (tr(W2k R(mu)) - P_Ik) at fixed remaining duals.  Both
power functions are nonincreasing in their own dual, which gives each f
the sign pattern bisection needs.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .kkt import DualEvaluator, kkt_check
from .linalg import HermitianMatrix, eig, numerical_rank, spectral_norm
from .problem import (
    DualBounds,
    DualPoint,
    ProblemInstance,
    Solution,
    SolverConfig,
    ZeroChannelError,
)
from .waterfill import waterfill

__all__ = [
    "ACTIVITY_TOL",
    "bisect",
    "dual_bounds",
    "check_ipc_redundant",
    "check_zf_shortcut",
    "iba_solve",
    "classify_regime",
]

# A dual counts as active when it exceeds this fraction of its upper bound.
ACTIVITY_TOL = 0.05

# Slack on feasibility comparisons (absolute).
FEAS_SLACK = 1e-12


def bisect(f, x_lo: float, x_hi: float, eps: float) -> float:
    """Root of f on [x_lo, x_hi] for f with the one-sided sign property
    (f >= 0 left of the root, f <= 0 right of it).

    Halves the bracket until it is no wider than eps, keeping the root
    inside; terminates immediately on an exact zero.  Returns the upper
    end of the final bracket, which for the solver's power functions is
    the budget-respecting side.  Needs at most
    ceil(log2((x_hi - x_lo) / eps)) function evaluations.
    """
    if not (eps > 0):
        raise ValueError(f"eps must be positive, got {eps}")
    if x_lo > x_hi:
        raise ValueError(f"empty bracket: [{x_lo}, {x_hi}]")
    while (x_hi - x_lo) > eps:
        x = 0.5 * (x_lo + x_hi)
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            x_hi = x
        else:
            x_lo = x
    return x_hi


def dual_bounds(inst: ProblemInstance) -> DualBounds:
    """Upper bounds on the optimal duals.

    mu1 <= m / (P_T + 1/lam_1(W1)) and, per constraint,
    mu2k <= 1 / (P_Ik / r(W2k) + lam_min(W2k) / lam_1(W1)).  A zero W2k
    pins its dual at 0; a zero interference budget gives an unbounded
    dual (that case is solved by projection, not bisection).
    """
    d1 = eig(inst.W1.mat)
    lam11 = float(d1.eigenvalues[0])
    if lam11 <= 1e-12 * max(1.0, abs(lam11)):
        raise ZeroChannelError("W1 is numerically zero")
    mu1u = inst.m / (inst.P_T + 1.0 / lam11)
    mu2u = np.zeros(inst.K)
    for k, c in enumerate(inst.constraints):
        r2 = numerical_rank(c.W2)
        if r2 == 0:
            mu2u[k] = 0.0
        elif c.P_I == 0.0:
            mu2u[k] = math.inf
        else:
            lam2m = max(float(np.min(np.linalg.eigvalsh(c.W2.mat))), 0.0)
            mu2u[k] = 1.0 / (c.P_I / r2 + lam2m / lam11)
    return DualBounds(mu1_upper=float(mu1u), mu2_upper=mu2u)


def check_ipc_redundant(inst: ProblemInstance, rank_tol: float = 1e-9) -> np.ndarray:
    """Per-constraint redundancy test against the water-filling solution.

    Constraint k is redundant iff tr(W2k R_WF) <= P_Ik; when every
    constraint passes, the water-filling covariance is optimal for the
    joint problem.
    """
    R = waterfill(inst.W1, inst.P_T, rank_tol).covariance.mat
    out = np.zeros(inst.K, dtype=bool)
    for k, c in enumerate(inst.constraints):
        out[k] = float(np.trace(c.W2.mat @ R).real) <= c.P_I + FEAS_SLACK
    return out


def check_zf_shortcut(inst: ProblemInstance, tol: float = 1e-9) -> bool:
    """Whether every IPC range lies in the null space of W1.

    In that case transmitting on the main channel leaks nothing and the
    water-filling solution is optimal for any budgets (zero-forcing is
    free).
    """
    W1 = inst.W1.mat
    bound = tol * (1.0 + spectral_norm(W1))
    for c in inst.constraints:
        d = eig(c.W2.mat)
        thr = tol * max(1.0, float(np.max(np.abs(d.eigenvalues))))
        V = d.eigenvectors[:, d.eigenvalues > thr]
        if V.shape[1] and np.any(np.linalg.norm(W1 @ V, axis=0) > bound):
            return False
    return True


def _residual(mu1, mu2, tx, p2, inst):
    parts = [abs(mu1 * (tx - inst.P_T)), max(0.0, tx - inst.P_T)]
    if inst.K:
        parts.append(float(np.max(np.abs(mu2 * (p2 - inst.P_I)))))
        parts.append(float(np.max(np.clip(p2 - inst.P_I, 0.0, None))))
    return max(parts)


def iba_solve(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    """Iterative bisection over the duals (the general-purpose solver).

    Starts from mu2 = 0; each outer iteration bisects mu1 on
    [0, mu1_upper] and then each mu2k on [0, mu2k_upper].  Stops when the
    combined residual max(|f1|, |f2k|, feasibility excess) drops below
    cfg.epsilon or after cfg.k_max iterations; a budget-respecting first
    iteration whose interference powers are already feasible is the
    water-filling optimum and exits immediately.

    Never raises on non-convergence: the best iterate is returned with
    ``converged=False`` and its residual.
    """
    cfg = cfg or SolverConfig()
    for k, c in enumerate(inst.constraints):
        if c.P_I == 0.0 and numerical_rank(c.W2, cfg.rank_tol) > 0:
            raise ValueError(
                f"constraint {k} demands zero interference; use solve(), which "
                "projects onto the zero-forcing subspace"
            )
    bounds = dual_bounds(inst)
    ev = DualEvaluator(inst, rank_tol=cfg.rank_tol)
    K = inst.K
    P_I = inst.P_I
    mu1 = 0.0
    mu2 = np.zeros(K)
    iterates: list[tuple[float, np.ndarray]] = []
    converged = False
    residual = math.inf
    iters = 0

    for k_outer in range(1, cfg.k_max + 1):
        iters = k_outer
        mu1 = bisect(
            lambda x: x * (ev.powers(x, mu2)[0] - inst.P_T),
            0.0,
            bounds.mu1_upper,
            cfg.delta,
        )
        tx, p2 = ev.powers(mu1, mu2)
        if k_outer == 1 and (K == 0 or np.all(p2 <= P_I + FEAS_SLACK)):
            # Prop-13 case 1: the IPC set is redundant, WF solves it.
            iterates.append((mu1, mu2.copy()))
            residual = _residual(mu1, mu2, tx, p2, inst)
            converged = residual <= cfg.epsilon
            break
        for j in range(K):
            hi = bounds.mu2_upper[j]
            if hi == 0.0:
                mu2[j] = 0.0
                continue

            def f2(x, j=j):
                trial = mu2.copy()
                trial[j] = x
                return x * (ev.powers(mu1, trial)[1][j] - P_I[j])

            mu2[j] = bisect(f2, 0.0, hi, cfg.delta)
        tx, p2 = ev.powers(mu1, mu2)
        iterates.append((mu1, mu2.copy()))
        residual = _residual(mu1, mu2, tx, p2, inst)
        if residual <= cfg.epsilon:
            converged = True
            break

    cap, tx, p2, R = ev.evaluate(mu1, mu2, want_matrix=True)
    duals = DualPoint(mu1=mu1, mu2=mu2.copy())
    sol = Solution(
        covariance=HermitianMatrix(R),
        capacity_nats=cap,
        duals=duals,
        tx_power=tx,
        interference_powers=p2,
        tpc_active=mu1 > ACTIVITY_TOL * bounds.mu1_upper,
        ipc_active=_active_flags(mu2, bounds.mu2_upper),
        kkt=None,
        iterations=iters,
        method="iba",
        converged=converged,
        residual=residual,
        dual_bounds=bounds,
        dual_iterates=tuple(iterates),
    )
    return _with_kkt(inst, sol, cfg)


def _active_flags(mu2: np.ndarray, mu2_upper: np.ndarray) -> np.ndarray:
    thr = ACTIVITY_TOL * np.where(np.isfinite(mu2_upper), mu2_upper, 1.0)
    return mu2 > thr


def _with_kkt(inst: ProblemInstance, sol: Solution, cfg: SolverConfig) -> Solution:
    res = kkt_check(inst, sol, tol=max(cfg.epsilon, 1e-9))
    return replace(sol, kkt=res)


def classify_regime(sol: Solution, tol: float = ACTIVITY_TOL) -> str:
    """Label a converged solution by which constraints its duals activate.

    ``tol`` is relative: a dual is active when it exceeds tol times its
    Prop-9 upper bound (absolute comparison when no bounds are attached).
    Returns 'power-limited' (no IPC dual active), 'interference-limited'
    (TPC dual inactive) or 'jointly-constrained'.
    """
    b = sol.dual_bounds
    t1 = tol * b.mu1_upper if b is not None else tol
    if b is not None:
        t2 = tol * np.where(np.isfinite(b.mu2_upper), b.mu2_upper, 1.0 / tol)
    else:
        t2 = np.full_like(sol.duals.mu2, tol)
    if sol.duals.mu2.size == 0 or np.all(sol.duals.mu2 <= t2):
        return "power-limited"
    if sol.duals.mu1 <= t1:
        return "interference-limited"
    return "jointly-constrained"
