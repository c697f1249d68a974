"""
Solvability checks: compatibility of the data at t = 0 and the s x s matrix B0(t).

Row j of B0 is (-<A_1 Phi, phi_j>, ..., -<A_r Phi, phi_j>, <f_{r+1}, phi_j>, ..., <f_s, phi_j>).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from discretization.stencils import FIRST_KEYS, difference_operators
from problems.model import ProblemSpec, StateField
from traces.boundary import operator_traces, pair_with_weights

logger = logging.getLogger(__name__)

DET_FLOOR_REL = 1e-8


class DegenerateSystemError(ValueError):
    def __init__(self, level: int, time: float, determinant: float, det_floor: float):
        super().__init__(
            f"det B0 = {determinant:.3e} at level {level} (t = {time:.6g}) "
            f"is below det_floor {det_floor:.3e}"
        )
        self.level = level
        self.time = time
        self.determinant = determinant
        self.det_floor = det_floor


@dataclass(frozen=True, eq=False)
class B0Matrix:
    """Per-level matrices over levels start_level .. start_level + len - 1."""

    matrices: np.ndarray
    determinants: np.ndarray
    conditions: np.ndarray
    det_floor: float
    times: np.ndarray
    start_level: int = 0

    def at(self, level: int) -> np.ndarray:
        return self.matrices[level - self.start_level]

    @property
    def worst_level(self) -> int:
        return self.start_level + int(np.argmin(np.abs(self.determinants)))

    @property
    def min_abs_det(self) -> float:
        return float(np.min(np.abs(self.determinants)))

    @property
    def max_condition(self) -> float:
        return float(np.max(self.conditions))

    def summary(self) -> dict:
        return {
            "min_abs_det": self.min_abs_det,
            "det_floor": self.det_floor,
            "worst_level": self.worst_level,
            "max_condition": self.max_condition,
        }


def _column_functions(problem: ProblemSpec, field: StateField) -> tuple[np.ndarray, np.ndarray]:
    """
    (levels, s, nb) boundary values of -A_i u (i <= r) then f_i (i > r), and the same
    columns evaluated with absolute coefficients, stencil weights and values. The second
    array bounds the first entrywise before any cancellation takes place.
    """
    levels = np.arange(field.start_level, field.stop_level + 1)
    samples = problem.samples
    grid = problem.grid
    bidx = grid.boundary_index
    ops = difference_operators(grid)
    magnitude = np.abs(field.values)
    columns, scales = [], []
    for i in range(problem.r):
        columns.append(-operator_traces(problem, i + 1, field))
        scale = np.abs(samples.mode_reaction[i, levels][:, bidx]) * magnitude[:, bidx]
        for k in range(grid.dim):
            stencil = abs(ops.boundary[FIRST_KEYS[k]])
            scale = scale + np.abs(samples.mode_drift[i, levels, k][:, bidx]) * (
                stencil @ magnitude.T
            ).T
        scales.append(scale)
    for m in range(problem.s - problem.r):
        values = samples.source_modes[m, levels][:, bidx]
        columns.append(values)
        scales.append(np.abs(values))
    return np.stack(columns, axis=1), np.stack(scales, axis=1)


def _assemble(problem: ProblemSpec, field: StateField, det_floor_rel: float):
    weights = problem.samples.weights
    grid = problem.grid
    columns, column_scales = _column_functions(problem, field)
    # (levels, s_rows, s_cols)
    matrices = np.einsum("lib,jb->lji", columns, weights * grid.weights)
    scale = np.einsum("lib,jb->lji", column_scales, np.abs(weights) * grid.weights)
    scale_norm = float(np.max(np.abs(scale).sum(axis=2))) if scale.size else 0.0
    det_floor = det_floor_rel * scale_norm**problem.s
    determinants = np.linalg.det(matrices)
    with np.errstate(all="ignore"):
        conditions = np.linalg.cond(matrices)
    conditions = np.where(np.isfinite(conditions), conditions, np.inf)
    return B0Matrix(
        matrices=matrices,
        determinants=determinants,
        conditions=conditions,
        det_floor=det_floor,
        times=field.times,
        start_level=field.start_level,
    )


def build_B0(phi: StateField, problem: ProblemSpec, det_floor_rel: float = DET_FLOOR_REL):
    """
    B0 over the levels of ``phi``; rejects the window when min |det| <= det_floor.

    det_floor is det_floor_rel * M**s with M the largest row sum of a majorant of B0:
    the same pairings taken with absolute coefficients, stencil weights and values of
    Phi. Unlike ||B0||_inf, M does not shrink with a column that cancels inside the
    stencil, such as A_i = d/dx on a constant Phi.
    """
    b0 = _assemble(problem, phi, det_floor_rel)
    worst = b0.worst_level
    determinant = float(b0.determinants[worst - b0.start_level])
    if not abs(determinant) > b0.det_floor:
        raise DegenerateSystemError(
            worst, float(problem.time_grid.times[worst]), determinant, b0.det_floor
        )
    return b0


def build_B0_initial(problem: ProblemSpec, det_floor_rel: float = DET_FLOOR_REL) -> dict:
    """
    The cheaper solvability matrix with u_0 in place of Phi, coefficients sampled at every
    level. A singular result is only a warning; build_B0 stays authoritative.
    """
    tg = problem.time_grid
    frozen = np.broadcast_to(problem.samples.initial, (tg.n_levels, problem.grid.n_nodes))
    field = StateField(frozen, problem.grid, tg.times)
    b0 = _assemble(problem, field, det_floor_rel)
    worst = b0.worst_level
    singular = not b0.min_abs_det > b0.det_floor
    if singular:
        logger.warning(
            f"B-initial pre-check: |det| = {b0.min_abs_det:.3e} at level {worst} "
            f"is below {b0.det_floor:.3e}"
        )
    return {
        "matrices": b0.matrices,
        "determinants": b0.determinants,
        "min_abs_det": b0.min_abs_det,
        "det_floor": b0.det_floor,
        "worst_level": worst,
        "singular": singular,
    }


def _initial_conormal_residual(problem: ProblemSpec) -> np.ndarray:
    samples = problem.samples
    grid = problem.grid
    ops = difference_operators(grid)
    u0 = samples.initial
    residual = samples.transfer[0] * u0[grid.boundary_index] - samples.boundary_data[0]
    for k in range(grid.dim):
        residual += samples.conormal[0, k] * (ops.boundary[FIRST_KEYS[k]] @ u0)
    return residual


def check_compatibility(problem: ProblemSpec) -> list[dict]:
    """Violations of gamma.grad u_0 + sigma u_0 = g(0) and psi_j(0) = <u_0, phi_j>."""
    violations = []
    grid = problem.grid
    residual = _initial_conormal_residual(problem)
    tolerance = problem.boundary_compat_tol
    for b in np.flatnonzero(np.abs(residual) > tolerance):
        violations.append(
            {
                "condition": "initial_boundary_compatibility",
                "node": int(grid.boundary_index[b]),
                "position": [float(c) for c in grid.boundary_points[b]],
                "magnitude": float(abs(residual[b])),
                "tolerance": tolerance,
                "message": (
                    f"conormal residual of u0 is {abs(residual[b]):.3e} at boundary node "
                    f"{int(grid.boundary_index[b])}"
                ),
            }
        )

    measured = problem.samples.measured
    if measured is not None:
        u0_trace = problem.samples.initial[grid.boundary_index]
        expected = pair_with_weights(u0_trace, problem.samples.weights, grid)
        gaps = np.abs(measured[:, 0] - expected)
        tolerance = problem.measurement.compat_tol
        for j in np.flatnonzero(gaps > tolerance):
            violations.append(
                {
                    "condition": "measurement_compatibility",
                    "index": int(j) + 1,
                    "magnitude": float(gaps[j]),
                    "tolerance": tolerance,
                    "message": f"psi_{j + 1}(0) differs from <u0, phi_{j + 1}> by {gaps[j]:.3e}",
                }
            )
    return violations


def compatibility_residuals(problem: ProblemSpec) -> dict:
    """Largest residual of each compatibility family (None when no data is present)."""
    boundary = float(np.max(np.abs(_initial_conormal_residual(problem))))
    measured = problem.samples.measured
    measurement = None
    if measured is not None:
        grid = problem.grid
        expected = pair_with_weights(
            problem.samples.initial[grid.boundary_index], problem.samples.weights, grid
        )
        measurement = [float(v) for v in np.abs(measured[:, 0] - np.atleast_1d(expected))]
    return {"boundary": boundary, "measurement": measurement}
