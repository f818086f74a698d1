"""Monte Carlo and finite-difference solvers for the 1-D SKT cross-diffusion system."""

from .model import (
    DensityField,
    EstimatorResult,
    GridSpec,
    NegativeInitialData,
    NegativeRate,
    NonPositiveDiffusion,
    NonPositiveWidth,
    SKTParameters,
    TestFunction,
    field_from_initial,
    gaussian_profile,
    interpolate,
    make_gaussian_test,
    make_initial,
    validate_params,
)
from .coeffs import NonPositiveRadicand, PointCoeffs, matrix_coeffs, point_coeffs
from .sde import NoiseStream, NonFiniteState, PathState, simulate_path
from .mc import (
    FieldTrajectory,
    NoConvergence,
    PicardResult,
    SolveResult,
    SolverConfig,
    estimate_point,
    propagate_layer,
    solve_layered,
    solve_picard,
)
from .fd import CFLViolation, FDConfig, cfl_limit, exact_linear, fd_solve, fd_step
from .verify import (
    CheckReport,
    GridMismatch,
    compare_trajectories,
    duality_pairing,
    flow_monotonicity,
    martingale_check,
    weak_residual,
)

__version__ = "0.1.0"

__all__ = [
    "CFLViolation",
    "CheckReport",
    "DensityField",
    "EstimatorResult",
    "FDConfig",
    "FieldTrajectory",
    "GridMismatch",
    "GridSpec",
    "NegativeInitialData",
    "NegativeRate",
    "NoConvergence",
    "NoiseStream",
    "NonFiniteState",
    "NonPositiveDiffusion",
    "NonPositiveRadicand",
    "NonPositiveWidth",
    "PathState",
    "PicardResult",
    "PointCoeffs",
    "SKTParameters",
    "SolveResult",
    "SolverConfig",
    "TestFunction",
    "cfl_limit",
    "compare_trajectories",
    "duality_pairing",
    "estimate_point",
    "exact_linear",
    "fd_solve",
    "fd_step",
    "field_from_initial",
    "flow_monotonicity",
    "gaussian_profile",
    "interpolate",
    "make_gaussian_test",
    "make_initial",
    "martingale_check",
    "matrix_coeffs",
    "point_coeffs",
    "propagate_layer",
    "simulate_path",
    "solve_layered",
    "solve_picard",
    "validate_params",
    "weak_residual",
]
