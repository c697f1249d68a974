from inverse.continuation import (
    ContinuationError,
    ContinuationResult,
    WindowPolicy,
    windowed_solve,
)
from inverse.fixed_point import (
    ConvergenceError,
    PicardResult,
    evaluate_R,
    picard_solve,
    prepare_window,
    psi_tilde,
    psi_tilde_derivative,
    window_norm,
)
from inverse.solvability import (
    B0Matrix,
    DegenerateSystemError,
    build_B0,
    build_B0_initial,
    check_compatibility,
    compatibility_residuals,
)
from inverse.verification import boundary_defect, overdetermination_residuals, verify_solution

__all__ = [
    "B0Matrix",
    "ContinuationError",
    "ContinuationResult",
    "ConvergenceError",
    "DegenerateSystemError",
    "PicardResult",
    "WindowPolicy",
    "boundary_defect",
    "build_B0",
    "build_B0_initial",
    "check_compatibility",
    "compatibility_residuals",
    "evaluate_R",
    "overdetermination_residuals",
    "picard_solve",
    "prepare_window",
    "psi_tilde",
    "psi_tilde_derivative",
    "verify_solution",
    "window_norm",
    "windowed_solve",
]
