"""Problem data, solver configuration and solution containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import HermitianMatrix, as_matrix

__all__ = [
    "ZeroChannelError",
    "DegenerateDualError",
    "InterferenceConstraint",
    "ProblemInstance",
    "DualPoint",
    "DualBounds",
    "SolverConfig",
    "KKTResiduals",
    "Solution",
]

# Validation slack for "PSD within tolerance" on instance matrices.
PSD_TOL = 1e-9


class ZeroChannelError(ValueError):
    """Raised when the main channel Gram matrix is (numerically) zero."""


class DegenerateDualError(ValueError):
    """Raised when all dual variables vanish together with the IPC Gram."""


@dataclass(frozen=True)
class InterferenceConstraint:
    """One interference power constraint: tr(W2 R) <= P_I."""

    W2: HermitianMatrix
    P_I: float

    def __post_init__(self):
        if not isinstance(self.W2, HermitianMatrix):
            object.__setattr__(self, "W2", HermitianMatrix(self.W2))
        if math.isnan(self.P_I) or self.P_I < 0:
            raise ValueError(f"interference budget must be >= 0, got {self.P_I}")


def _check_psd(M: HermitianMatrix, name: str) -> None:
    w = np.linalg.eigvalsh(M.mat)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    if w.size and w[0] < -PSD_TOL * scale:
        raise ValueError(
            f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})"
        )


class ProblemInstance:
    """Main-channel Gram W1, interference constraints (W2k, P_Ik), budget P_T.

    All matrices must be Hermitian PSD of a common dimension m.  An empty
    constraint list describes the classic transmit-power-only problem.
    """

    __slots__ = ("W1", "constraints", "P_T")

    def __init__(self, W1, constraints, P_T: float):
        if not isinstance(W1, HermitianMatrix):
            W1 = HermitianMatrix(W1)
        _check_psd(W1, "W1")
        cons = []
        for k, c in enumerate(constraints):
            if not isinstance(c, InterferenceConstraint):
                c = InterferenceConstraint(*c)
            if c.W2.m != W1.m:
                raise ValueError(
                    f"constraint {k}: dimension {c.W2.m} does not match W1 ({W1.m})"
                )
            _check_psd(c.W2, f"W2[{k}]")
            cons.append(c)
        if not (P_T > 0):
            raise ValueError(f"total power budget must be > 0, got {P_T}")
        self.W1 = W1
        self.constraints = tuple(cons)
        self.P_T = float(P_T)

    @property
    def m(self) -> int:
        return self.W1.m

    @property
    def K(self) -> int:
        return len(self.constraints)

    @property
    def W2_list(self) -> list[np.ndarray]:
        return [c.W2.mat for c in self.constraints]

    @property
    def P_I(self) -> np.ndarray:
        return np.array([c.P_I for c in self.constraints], dtype=float)

    def single(self) -> InterferenceConstraint:
        if self.K != 1:
            raise ValueError(f"expected a single IPC, instance has {self.K}")
        return self.constraints[0]

    def __repr__(self):
        return f"ProblemInstance(m={self.m}, K={self.K}, P_T={self.P_T})"


@dataclass(frozen=True)
class DualPoint:
    """Nonnegative dual variables (mu1 for the TPC, mu2[k] per IPC)."""

    mu1: float
    mu2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu2", np.atleast_1d(np.asarray(self.mu2, dtype=float)))
        if self.mu1 < 0 or np.any(self.mu2 < 0):
            raise ValueError("dual variables must be nonnegative")


@dataclass(frozen=True)
class DualBounds:
    """Upper bounds on the optimal dual variables."""

    mu1_upper: float
    mu2_upper: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    """Accuracy knobs for the iterative bisection solver.

    delta is the inner (scalar bisection) accuracy, epsilon the outer
    residual tolerance; rank_tol the relative eigenvalue cutoff used
    throughout.
    """

    delta: float = 1e-12
    epsilon: float = 1e-10
    k_max: int = 500
    rank_tol: float = 1e-9

    def __post_init__(self):
        if not (self.delta > 0) or not (self.epsilon > 0):
            raise ValueError("delta and epsilon must be positive")
        if self.delta > self.epsilon:
            raise ValueError("delta must not exceed epsilon")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")

    @classmethod
    def with_epsilon(cls, epsilon: float, k_max: int = 500, rank_tol: float = 1e-9):
        """Config with the inner accuracy pinned at epsilon / 100."""
        return cls(delta=epsilon / 100.0, epsilon=epsilon, k_max=k_max, rank_tol=rank_tol)


@dataclass(frozen=True)
class KKTResiduals:
    """Diagnostics for the optimality conditions at a candidate solution.

    The implied PSD multiplier is M = mu1 I + sum_k mu2k W2k - (I+W1 R)^-1 W1;
    at an optimum M is PSD and annihilates R.  All fields are nonnegative
    magnitudes of violations.
    """

    m_neg_eigenvalue: float
    m_dot_r_norm: float
    slack_tpc: float
    slack_ipc: np.ndarray
    feas_tpc: float
    feas_ipc: np.ndarray
    feas_psd: float
    passed: bool = field(default=False)

    @property
    def max_violation(self) -> float:
        parts = [
            self.m_neg_eigenvalue,
            self.m_dot_r_norm,
            self.slack_tpc,
            self.feas_tpc,
            self.feas_psd,
        ]
        if self.slack_ipc.size:
            parts.append(float(np.max(self.slack_ipc)))
            parts.append(float(np.max(self.feas_ipc)))
        return float(max(parts))


@dataclass(frozen=True)
class Solution:
    """Solver output: optimal covariance, capacity and diagnostics.

    ``method`` names the path that produced the solution ('iba' or a
    closed-form label); ``iterations`` counts outer IBA iterations (0 for
    closed forms).  ``dual_iterates`` records the (mu1, mu2) sequence of
    the IBA for convergence analysis.
    """

    covariance: HermitianMatrix
    capacity_nats: float
    duals: DualPoint
    tx_power: float
    interference_powers: np.ndarray
    tpc_active: bool
    ipc_active: np.ndarray
    kkt: KKTResiduals | None
    iterations: int
    method: str
    converged: bool = True
    residual: float = 0.0
    dual_bounds: DualBounds | None = None
    dual_iterates: tuple = ()

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)
