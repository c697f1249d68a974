from forward.solver import (
    SolverError,
    assemble_spatial_operator,
    mode_operator_matrix,
    solve_auxiliary_phi,
    solve_forward,
    solve_reduced,
    step_theta,
    theta_residual,
)

__all__ = [
    "SolverError",
    "assemble_spatial_operator",
    "mode_operator_matrix",
    "solve_auxiliary_phi",
    "solve_forward",
    "solve_reduced",
    "step_theta",
    "theta_residual",
]
