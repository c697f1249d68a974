"""Evaluation package boundary."""

from evals.convergence_study import (
    StudyAborted,
    forward_error,
    observed_orders,
    reconstruction_error,
    refinement_levels,
    run_convergence_study,
)
from evals.noise_study import derive_seeds, run_noise_study

__all__ = [
    "StudyAborted",
    "derive_seeds",
    "forward_error",
    "observed_orders",
    "reconstruction_error",
    "refinement_levels",
    "run_convergence_study",
    "run_noise_study",
]
