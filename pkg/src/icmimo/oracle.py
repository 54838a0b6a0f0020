"""Independent ground-truth solver used to cross-check the main solver.

Two stages, neither sharing code with the KKT machinery: a search over
the dual box that minimizes the (convex) Lagrangian dual function on a
zoomed logarithmic grid, keeping the best primal-feasible candidate after
scaling each trial covariance onto the feasible set, followed by
conditional-gradient (Frank-Wolfe) ascent of the concave capacity over
the trace-constrained PSD cone, where every linearized step is a rank-one
feasible direction.  Desk scale only.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.linalg
import scipy.optimize

from .linalg import HermitianMatrix
from .problem import ProblemInstance

__all__ = ["oracle_solve"]

MAX_DIM = 6
MAX_CONSTRAINTS = 3


def _capacity(W1: np.ndarray, R: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(np.eye(W1.shape[0]) + W1 @ R)
    return float(logdet)


def _scale_to_feasible(R, P_T, W2s, P_Is):
    """Clip to the PSD cone, then shrink onto the constraint polytope."""
    R = (R + R.conj().T) / 2
    w, V = np.linalg.eigh(R)
    w = np.clip(w, 0.0, None)
    R = (V * w) @ V.conj().T
    tr = float(np.trace(R).real)
    if tr <= 0:
        return np.zeros_like(R)
    s = P_T / tr
    for W2, P_I in zip(W2s, P_Is):
        leak = float(np.trace(W2 @ R).real)
        if leak > 0:
            s = min(s, P_I / leak)
    s = min(s, 1.0)
    return s * R if s < 1.0 else R


def _dual_trial(W1: np.ndarray, G: np.ndarray) -> np.ndarray | None:
    """Maximizer of log|I + W1 R| - tr(G R) over R >= 0 (own derivation:
    whiten by G on its positive eigenspace, water-fill at level one)."""
    g, U = np.linalg.eigh(G)
    keep = g > 1e-12 * max(float(g[-1]), 1.0) if g.size else g > 0
    if not np.any(keep):
        return None
    Uk = U[:, keep]
    root = 1.0 / np.sqrt(g[keep])
    T = Uk * root
    A = T.conj().T @ W1 @ T
    a, Q = np.linalg.eigh(A)
    alloc = np.where(a > 1.0, 1.0 - 1.0 / np.where(a > 1.0, a, 1.0), 0.0)
    inner = (Q * alloc) @ Q.conj().T
    return T @ inner @ T.conj().T


class _DualScan:
    """Evaluates the dual function and collects feasible candidates."""

    def __init__(self, W1, P_T, W2s, P_Is):
        self.W1 = W1
        self.P_T = P_T
        self.W2s = W2s
        self.P_Is = P_Is
        self.m = W1.shape[0]
        self.best_cap = 0.0
        self.best_R = np.zeros((self.m, self.m), dtype=complex)

    def dual_value(self, mus) -> float:
        mu1 = max(float(mus[0]), 0.0)
        mu2 = np.clip(np.asarray(mus[1:], dtype=float), 0.0, None)
        G = mu1 * np.eye(self.m, dtype=complex)
        for mk, W2 in zip(mu2, self.W2s):
            G = G + mk * W2
        trial = _dual_trial(self.W1, G)
        if trial is None:
            return math.inf
        feas = _scale_to_feasible(trial, self.P_T, self.W2s, self.P_Is)
        cap = _capacity(self.W1, feas)
        if cap > self.best_cap:
            self.best_cap, self.best_R = cap, feas
        g, U = np.linalg.eigh(G)
        null = U[:, g <= 1e-12 * max(float(g[-1]), 1.0)]
        if null.shape[1] and float(np.linalg.norm(self.W1 @ null)) > 1e-9 * (
            1.0 + float(np.linalg.norm(self.W1))
        ):
            # Unpenalized directions excite the channel: the Lagrangian
            # supremum is infinite, only the scaled candidate is kept.
            return math.inf
        val = _capacity(self.W1, trial) - mu1 * (float(np.trace(trial).real) - self.P_T)
        for mk, W2, P_I in zip(mu2, self.W2s, self.P_Is):
            val -= mk * (float(np.trace(W2 @ trial).real) - P_I)
        return val


def _grid_axes(lo_scale, uppers, n):
    axes = []
    for u in uppers:
        pts = np.concatenate(([0.0], np.geomspace(u * lo_scale, u, n - 1)))
        axes.append(pts)
    return axes


def _grid_stage(W1, P_T, W2s, P_Is, n, zoom_rounds=5):
    """Minimize the dual function over the dual box.

    Coarse logarithmic grid, then zoom rounds whose windows span three of
    the previous round's grid steps (the dual function is convex, so the
    incumbent cell brackets the minimizer), then a Nelder-Mead polish.
    Returns the best feasible candidate seen plus the polished duals.
    """
    K = len(W2s)
    m = W1.shape[0]
    uppers = [m / P_T] + [m / p if p > 0 else 1.0 for p in P_Is]
    scan = _DualScan(W1, P_T, W2s, P_Is)
    # Keep the total grid size near n^2 regardless of K.
    n_axis = max(7, int(round((n * n) ** (1.0 / (K + 1)))))
    n_zoom = max(7, min(n_axis, 13))

    def sweep(axes):
        best = (math.inf, None)
        for mus in itertools.product(*axes):
            v = scan.dual_value(mus)
            if v < best[0]:
                best = (v, mus)
        return best[1]

    centers = sweep(_grid_axes(1e-6, uppers, n_axis))
    if centers is None:
        return scan, None
    step = 1e6 ** (1.0 / (n_axis - 2))
    zero_hi = [u * 1e-6 for u in uppers]
    for _ in range(zoom_rounds):
        window = step**3
        axes = []
        for i, (c, u) in enumerate(zip(centers, uppers)):
            if c <= 0:
                # Boundary minimizer: refine a shrinking sliver above 0.
                axes.append(
                    np.concatenate(([0.0], np.geomspace(zero_hi[i] * 1e-3, zero_hi[i], n_zoom - 1)))
                )
                zero_hi[i] /= 10.0
            else:
                axes.append(
                    np.concatenate(([0.0], np.geomspace(c / window, min(c * window, u * 4.0), n_zoom - 1)))
                )
        hit = sweep(axes)
        if hit is not None:
            centers = hit
        step = window ** (1.0 / (n_zoom - 2))

    res = scipy.optimize.minimize(
        scan.dual_value,
        np.asarray(centers, dtype=float),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-13, "maxiter": 600},
    )
    scan.dual_value(res.x)
    return scan, np.clip(res.x, 0.0, None)


def _rank1_candidates(A, P_T, W2s, P_Is, extra_dirs):
    """Feasible rank-one steps: top direction of the linearized objective
    under each single-constraint hypothesis, plus caller-supplied spares."""
    dirs = []
    w, V = np.linalg.eigh(A)
    dirs.append(V[:, -1])
    for W2 in W2s:
        ridge = W2 + (1e-9 * max(float(np.linalg.eigvalsh(W2)[-1]), 1.0) + 1e-12) * np.eye(A.shape[0])
        try:
            _, Vg = scipy.linalg.eigh(A, ridge)
            dirs.append(Vg[:, -1] / np.linalg.norm(Vg[:, -1]))
        except scipy.linalg.LinAlgError:
            pass
    dirs.extend(extra_dirs)
    out = []
    for v in dirs:
        v = v / np.linalg.norm(v)
        p = P_T
        for W2, P_I in zip(W2s, P_Is):
            leak = float((v.conj() @ (W2 @ v)).real)
            if leak * p > P_I:
                p = P_I / leak
        S = p * np.outer(v, v.conj())
        out.append((float(np.trace(A @ S).real), S))
    return out


def _frank_wolfe(W1, P_T, W2s, P_Is, R0, iters, rng):
    m = W1.shape[0]
    w1_vals, w1_vecs = np.linalg.eigh(W1)
    Q = (w1_vecs * np.sqrt(np.clip(w1_vals, 0.0, None))) @ w1_vecs.conj().T
    R = R0.copy()
    best_R = R.copy()
    best_cap = _capacity(W1, R)
    I = np.eye(m)
    stall = 0
    for k in range(iters):
        grad = Q @ np.linalg.solve(I + Q @ R @ Q, Q)
        extra = []
        if k % 25 == 0:
            z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            extra.append(z)
        cands = _rank1_candidates(grad, P_T, W2s, P_Is, extra)
        cands.append((0.0, np.zeros_like(R)))  # allows pure shrinking steps
        _, S = max(cands, key=lambda t: t[0])
        gammas = (2.0 / (k + 2.0), 1.0, 0.5, 0.2, 0.05, 0.01)
        step_best = None
        for g in gammas:
            cand = (1.0 - g) * R + g * S
            cap = _capacity(W1, cand)
            if step_best is None or cap > step_best[0]:
                step_best = (cap, cand)
        cap, R = step_best
        if cap > best_cap + 1e-14:
            best_cap, best_R = cap, R.copy()
            stall = 0
        else:
            stall += 1
            if stall > 80:
                break
    return best_cap, best_R


def oracle_solve(
    inst: ProblemInstance,
    grid_points: int = 40,
    refine_iters: int = 2000,
    seed: int = 0,
) -> tuple[float, HermitianMatrix]:
    """Ground-truth capacity and covariance by dual-grid search plus ascent.

    Deterministic for a fixed seed.  Refuses instances above desk scale
    (m <= 6, K <= 3): this is a verification tool, not a production path.
    """
    if inst.m > MAX_DIM:
        raise ValueError(f"oracle handles m <= {MAX_DIM}, got {inst.m}")
    if inst.K > MAX_CONSTRAINTS:
        raise ValueError(f"oracle handles K <= {MAX_CONSTRAINTS}, got {inst.K}")
    W1 = inst.W1.mat
    W2s = inst.W2_list
    P_Is = list(inst.P_I)
    rng = np.random.default_rng(seed)

    scan, _ = _grid_stage(W1, inst.P_T, W2s, P_Is, grid_points)
    cap_fw, R_fw = _frank_wolfe(W1, inst.P_T, W2s, P_Is, scan.best_R, refine_iters, rng)
    if cap_fw >= scan.best_cap:
        cap, R = cap_fw, R_fw
    else:
        cap, R = scan.best_cap, scan.best_R
    R = _scale_to_feasible(R, inst.P_T, W2s, P_Is)
    return _capacity(W1, R), HermitianMatrix(R)
