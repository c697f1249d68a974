"""Residual checks of a recovered (u, q) pair."""

from __future__ import annotations

import numpy as np

from discretization.stencils import difference_operators
from forward.solver import theta_residual
from problems.model import ProblemSpec, QTrajectory, StateField
from traces.boundary import combined_operator_traces, pair_with_weights


def overdetermination_residuals(u: StateField, problem: ProblemSpec) -> np.ndarray:
    """(s, levels) <u, phi_j>(t_n) - psi_j(t_n) over the levels of ``u``."""
    measured = problem.samples.measured
    if measured is None:
        raise ValueError(f"problem {problem.name!r} has no measured data")
    grid = problem.grid
    pairing = pair_with_weights(u.values[:, grid.boundary_index], problem.samples.weights, grid)
    return np.atleast_2d(pairing.T) - measured[:, u.start_level : u.stop_level + 1]


def boundary_defect(u: StateField, q: QTrajectory, problem: ProblemSpec) -> np.ndarray:
    """
    (steps, boundary nodes) amount by which the boundary values of ``u`` miss the traced
    equation u_t + A(q)u = f over each step. Boundary nodes carry the conormal condition
    instead, so this shrinks with the grid and not with the iteration.
    """
    samples = problem.samples
    bidx = problem.grid.boundary_index
    theta = problem.theta
    levels = np.arange(u.start_level, u.stop_level + 1)
    q_values = q.window(u.start_level, u.stop_level).values
    source = samples.source_base[levels][:, bidx].copy()
    for m in range(problem.s - problem.r):
        source += q_values[problem.r + m][:, None] * samples.source_modes[m, levels][:, bidx]
    balance = combined_operator_traces(problem, q_values, u) - source
    rate = np.diff(u.values[:, bidx], axis=0) / problem.time_grid.dt
    return rate + theta * balance[1:] + (1.0 - theta) * balance[:-1]


def verify_solution(u: StateField, q: QTrajectory, problem: ProblemSpec) -> dict:
    residuals = overdetermination_residuals(u, problem)
    per_weight = np.max(np.abs(residuals), axis=1)
    scheme = theta_residual(problem, q, u)
    defect = None
    if difference_operators(problem.grid).second_order_traces:
        defect = float(np.max(np.abs(boundary_defect(u, q, problem))))
    return {
        "overdetermination_residual": float(np.max(per_weight)),
        "overdetermination_per_weight": [float(v) for v in per_weight],
        "overdetermination_worst_level": u.start_level
        + int(np.argmax(np.max(np.abs(residuals), axis=0))),
        "pde_residual": float(np.max(scheme)) if scheme.size else 0.0,
        "boundary_defect": defect,
    }
