"""Pre-solve audit of a problem: ellipticity, non-tangency, symmetry, compatibility, B-initial."""

from __future__ import annotations

import numpy as np

from inverse.solvability import (
    DET_FLOOR_REL,
    build_B0_initial,
    check_compatibility,
    compatibility_residuals,
)
from problems.model import ProblemSpec, ProblemValidationError

SYMMETRY_TOL = 1e-12

__all__ = ["ProblemValidationError", "audit_problem"]


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def audit_problem(problem: ProblemSpec, det_floor_rel: float = DET_FLOOR_REL) -> dict:
    """
    Every check in one map. ``violations`` rejects the configuration; ``warnings``
    (the B-initial pre-check) do not.
    """
    samples = problem.samples
    times = problem.time_grid.times
    violations, warnings = [], []

    delta_level = int(np.argmin(samples.ellipticity))
    delta0 = float(samples.ellipticity[delta_level])
    if not delta0 > 0:
        violations.append(
            {
                "condition": "ellipticity",
                "level": delta_level,
                "magnitude": delta0,
                "message": (
                    f"ellipticity delta0 = {delta0:.3e} <= 0 at t = {times[delta_level]:.6g}"
                ),
            }
        )

    eps_level = int(np.argmin(samples.non_tangency))
    epsilon0 = float(samples.non_tangency[eps_level])
    if not epsilon0 > 0:
        violations.append(
            {
                "condition": "non_tangency",
                "level": eps_level,
                "magnitude": epsilon0,
                "message": (
                    f"non-tangency epsilon0 = {epsilon0:.3e} <= 0 at t = {times[eps_level]:.6g}"
                ),
            }
        )

    if samples.asymmetry > SYMMETRY_TOL:
        violations.append(
            {
                "condition": "symmetry",
                "magnitude": samples.asymmetry,
                "message": (
                    "diffusion matrix is not symmetric "
                    f"(max |a_kl - a_lk| = {samples.asymmetry:.3e})"
                ),
            }
        )

    compatibility = check_compatibility(problem)
    violations.extend(compatibility)
    residuals = compatibility_residuals(problem)

    b_initial = build_B0_initial(problem, det_floor_rel)
    if b_initial["singular"]:
        warnings.append(
            {
                "condition": "b_initial",
                "level": b_initial["worst_level"],
                "magnitude": b_initial["min_abs_det"],
                "message": (
                    f"B-initial pre-check: min |det| = {b_initial['min_abs_det']:.3e} at level "
                    f"{b_initial['worst_level']} is below {b_initial['det_floor']:.3e}"
                ),
            }
        )

    boundary_ok = not any(v["condition"] == "initial_boundary_compatibility" for v in compatibility)
    measurement_ok = not any(v["condition"] == "measurement_compatibility" for v in compatibility)
    return {
        "ellipticity": {"delta0": delta0, "level": delta_level, "status": _status(delta0 > 0)},
        "non_tangency": {"epsilon0": epsilon0, "level": eps_level, "status": _status(epsilon0 > 0)},
        "symmetry": {
            "max_asymmetry": samples.asymmetry,
            "status": _status(samples.asymmetry <= SYMMETRY_TOL),
        },
        "boundary_compatibility": {
            "max_residual": residuals["boundary"],
            "tolerance": problem.boundary_compat_tol,
            "status": _status(boundary_ok),
        },
        "measurement_compatibility": {
            "residuals": residuals["measurement"],
            "tolerance": problem.measurement.compat_tol,
            "status": "skipped" if residuals["measurement"] is None else _status(measurement_ok),
        },
        "b_initial": {
            "min_abs_det": b_initial["min_abs_det"],
            "det_floor": b_initial["det_floor"],
            "level": b_initial["worst_level"],
            "status": "warn" if b_initial["singular"] else "pass",
        },
        "violations": violations,
        "warnings": warnings,
    }
