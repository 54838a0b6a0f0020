"""Capacity and optimal signaling for Gaussian MIMO channels under
transmit-power and interference-power constraints."""

from .bisection import (
    ACTIVITY_TOL,
    bisect,
    check_ipc_redundant,
    check_zf_shortcut,
    classify_regime,
    dual_bounds,
    iba_solve,
)
from .closed_forms import (
    CapacityReport,
    Rank1Geometry,
    capacity_bounds,
    classify_capacity,
    common_eigv,
    full_rank_ipc,
    full_rank_tpc,
    ipc_alone_capacity,
    ipc_only,
    rank1_geometry,
    rank1_w1,
    rank1_w2,
)
from .kkt import (
    capacity_from_duals,
    covariance_from_duals,
    kkt_check,
    powers_from_duals,
)
from .linalg import (
    EigenDecomposition,
    HermitianMatrix,
    eig,
    null_space_contained,
    numerical_rank,
    pinv,
    psd_part,
    sqrt_psd,
)
from .multiuser import solve_multiuser, solve_sum_ipc
from .oracle import oracle_solve
from .problem import (
    DegenerateDualError,
    DualBounds,
    DualPoint,
    InterferenceConstraint,
    KKTResiduals,
    ProblemInstance,
    Solution,
    SolverConfig,
    ZeroChannelError,
)
from .solve import solve
from .waterfill import WaterfillResult, capacity_of, waterfill

__version__ = "0.1.0"

__all__ = [
    "ACTIVITY_TOL",
    "CapacityReport",
    "DegenerateDualError",
    "DualBounds",
    "DualPoint",
    "EigenDecomposition",
    "HermitianMatrix",
    "InterferenceConstraint",
    "KKTResiduals",
    "ProblemInstance",
    "Rank1Geometry",
    "Solution",
    "SolverConfig",
    "WaterfillResult",
    "ZeroChannelError",
    "bisect",
    "capacity_bounds",
    "capacity_from_duals",
    "capacity_of",
    "check_ipc_redundant",
    "check_zf_shortcut",
    "classify_capacity",
    "classify_regime",
    "common_eigv",
    "covariance_from_duals",
    "dual_bounds",
    "eig",
    "full_rank_ipc",
    "full_rank_tpc",
    "iba_solve",
    "ipc_alone_capacity",
    "ipc_only",
    "kkt_check",
    "null_space_contained",
    "numerical_rank",
    "oracle_solve",
    "pinv",
    "powers_from_duals",
    "psd_part",
    "rank1_geometry",
    "rank1_w1",
    "rank1_w2",
    "solve",
    "solve_multiuser",
    "solve_sum_ipc",
    "sqrt_psd",
    "waterfill",
]
