"""
Implicit theta-scheme for u_t + A(q)u = f with the conormal Robin condition.

Interior rows discretize the PDE by centered differences. Boundary rows carry
gamma . grad u + sigma u = g and are always imposed at the new time level.
Each level is factorized with a sparse direct LU.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from discretization.stencils import difference_operators
from problems.model import ProblemSpec, ProblemValidationError, QTrajectory, StateField

logger = logging.getLogger(__name__)

LINEAR_RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message: str, level: int):
        super().__init__(f"{message} (time level {level})")
        self.level = level


def _check_level(problem: ProblemSpec, level: int):
    samples = problem.samples
    violations = []
    if not samples.ellipticity[level] > 0:
        violations.append(
            {
                "condition": "ellipticity",
                "level": level,
                "magnitude": float(samples.ellipticity[level]),
                "message": f"delta0 = {samples.ellipticity[level]:.3e} <= 0 at level {level}",
            }
        )
    if not samples.non_tangency[level] > 0:
        violations.append(
            {
                "condition": "non_tangency",
                "level": level,
                "magnitude": float(samples.non_tangency[level]),
                "message": f"epsilon0 = {samples.non_tangency[level]:.3e} <= 0 at level {level}",
            }
        )
    if violations:
        raise ProblemValidationError(violations)


def _checked_q(problem: ProblemSpec, q_at_t) -> np.ndarray:
    q_at_t = np.asarray(q_at_t, dtype=float)
    if q_at_t.shape != (problem.s,):
        raise ValueError(f"expected {problem.s} coefficient values, got shape {q_at_t.shape}")
    if not np.all(np.isfinite(q_at_t)):
        raise ValueError("coefficient values must be finite")
    return q_at_t


def mode_operator_matrix(problem: ProblemSpec, index: int, level: int) -> sp.csr_matrix:
    """Full-grid matrix of the first-order mode A_index (1-based) at ``level``."""
    samples = problem.samples
    ops = difference_operators(problem.grid)
    i = index - 1
    matrix = sp.diags(samples.mode_reaction[i, level])
    for k in range(problem.grid.dim):
        matrix = matrix + sp.diags(samples.mode_drift[i, level, k]) @ ops.first(k)
    return sp.csr_matrix(matrix)


def _interior_operator(problem: ProblemSpec, q_at_t: np.ndarray, level: int) -> sp.csr_matrix:
    samples = problem.samples
    ops = difference_operators(problem.grid)
    dim = problem.grid.dim
    drift = samples.drift[level].copy()
    reaction = samples.reaction[level].copy()
    for i in range(problem.r):
        drift += q_at_t[i] * samples.mode_drift[i, level]
        reaction += q_at_t[i] * samples.mode_reaction[i, level]

    matrix = sp.diags(reaction)
    for k in range(dim):
        matrix = matrix + sp.diags(drift[k]) @ ops.first(k)
        for l in range(dim):
            matrix = matrix - sp.diags(samples.diffusion[level, k, l]) @ ops.second(k, l)
    return matrix


def _boundary_operator(problem: ProblemSpec, level: int) -> sp.csr_matrix:
    samples = problem.samples
    grid = problem.grid
    ops = difference_operators(grid)
    nb = grid.n_boundary
    rows = sp.diags(samples.transfer[level]) @ sp.csr_matrix(
        (np.ones(nb), (np.arange(nb), grid.boundary_index)), shape=(nb, grid.n_nodes)
    )
    for k in range(grid.dim):
        rows = rows + sp.diags(samples.conormal[level, k]) @ ops.boundary["xy"[k]]
    return rows


def assemble_spatial_operator(problem: ProblemSpec, q_at_t, level: int):
    """
    Spatial matrix L and right-hand side b at ``level``.

    Interior rows of L u = b discretize A(q)u = f_0 + sum_{i>r} q_i f_i, boundary rows
    discretize gamma . grad u + sigma u = g.
    """
    q_at_t = _checked_q(problem, q_at_t)
    _check_level(problem, level)
    return _spatial_matrix(problem, q_at_t, level), _source_vector(problem, q_at_t, level)


def _spatial_matrix(problem: ProblemSpec, q_at_t: np.ndarray, level: int) -> sp.csr_matrix:
    grid = problem.grid
    interior = sp.diags(grid.interior_mask.astype(float)) @ _interior_operator(
        problem, q_at_t, level
    )
    scatter = sp.csr_matrix(
        (np.ones(grid.n_boundary), (grid.boundary_index, np.arange(grid.n_boundary))),
        shape=(grid.n_nodes, grid.n_boundary),
    )
    return sp.csr_matrix(interior + scatter @ _boundary_operator(problem, level))


def _source_vector(problem: ProblemSpec, q_at_t: np.ndarray, level: int) -> np.ndarray:
    samples = problem.samples
    grid = problem.grid
    rhs = samples.source_base[level].copy()
    for m in range(problem.s - problem.r):
        rhs += q_at_t[problem.r + m] * samples.source_modes[m, level]
    rhs[grid.boundary_index] = samples.boundary_data[level]
    return rhs


def _theta_system(problem, theta, dt, matrix_next, rhs_next, matrix_now, rhs_now, u_now):
    mask = problem.grid.interior_mask
    implicit = np.where(mask, theta, 1.0)
    system = sp.diags(mask / dt) + sp.diags(implicit) @ matrix_next
    explicit = u_now / dt - (1.0 - theta) * (matrix_now @ u_now)
    rhs = np.where(mask, explicit + theta * rhs_next + (1.0 - theta) * rhs_now, rhs_next)
    return sp.csc_matrix(system), rhs


def _solve_level(system: sp.csc_matrix, rhs: np.ndarray, level: int) -> np.ndarray:
    try:
        lu = splu(system)
    except RuntimeError as exc:
        raise SolverError(f"singular linear system: {exc}", level) from exc
    solution = lu.solve(rhs)
    if not np.all(np.isfinite(solution)):
        raise SolverError("linear solve produced non-finite values", level)
    residual = np.max(np.abs(system @ solution - rhs))
    scale = abs(system).max() * np.max(np.abs(solution)) + np.max(np.abs(rhs))
    relative = residual / scale if scale > 0 else residual
    logger.debug(f"level {level}: relative linear residual {relative:.2e}")
    if relative > LINEAR_RESIDUAL_TOL:
        raise SolverError(f"numerically rank-deficient system, residual {relative:.2e}", level)
    return solution


def _march(problem, q_values, start_level, stop_level, initial, source, theta):
    """Advance from ``initial`` at start_level; ``source(level, q)`` supplies right-hand sides."""
    tg = problem.time_grid
    dt = tg.dt
    values = np.empty((stop_level - start_level + 1, problem.grid.n_nodes))
    values[0] = initial
    _check_level(problem, start_level)
    matrix_now = _spatial_matrix(problem, q_values[:, 0], start_level)
    rhs_now = source(start_level, q_values[:, 0])
    for k, level in enumerate(range(start_level + 1, stop_level + 1), start=1):
        _check_level(problem, level)
        matrix_next = _spatial_matrix(problem, q_values[:, k], level)
        rhs_next = source(level, q_values[:, k])
        system, rhs = _theta_system(
            problem, theta, dt, matrix_next, rhs_next, matrix_now, rhs_now, values[k - 1]
        )
        values[k] = _solve_level(system, rhs, level)
        matrix_now, rhs_now = matrix_next, rhs_next
    return StateField(values, problem.grid, tg.times[start_level : stop_level + 1], start_level)


def _window_q(problem, q, start_level, stop_level) -> np.ndarray:
    if q is None:
        return np.zeros((problem.s, stop_level - start_level + 1))
    if not isinstance(q, QTrajectory):
        raise TypeError("q must be a QTrajectory")
    if q.s != problem.s:
        raise ValueError(f"trajectory has {q.s} components, problem needs {problem.s}")
    return q.window(start_level, stop_level).values


def _level_range(problem, start_level, stop_level):
    stop_level = problem.time_grid.n_steps if stop_level is None else int(stop_level)
    if not 0 <= start_level < stop_level <= problem.time_grid.n_steps:
        raise ValueError(f"invalid level range [{start_level}, {stop_level}]")
    return int(start_level), stop_level


def step_theta(u_now, problem: ProblemSpec, q: QTrajectory | None, level: int, theta=None):
    """One step from ``level`` to ``level + 1``."""
    u_now = np.asarray(u_now, dtype=float)
    if u_now.shape != (problem.grid.n_nodes,) or not np.all(np.isfinite(u_now)):
        raise ValueError("u_now must be a finite node vector")
    theta = problem.theta if theta is None else float(theta)
    q_values = _window_q(problem, q, level, level + 1)

    def source(lv, q_at_t):
        return _source_vector(problem, q_at_t, lv)

    field = _march(problem, q_values, level, level + 1, u_now, source, theta)
    return field.values[1].copy()


def solve_forward(
    problem: ProblemSpec,
    q: QTrajectory | None = None,
    start_level: int = 0,
    stop_level: int | None = None,
    initial=None,
) -> StateField:
    """Solve from ``initial`` (u_0 when omitted) over the level range; q=None means q = 0."""
    start_level, stop_level = _level_range(problem, start_level, stop_level)
    initial = problem.samples.initial if initial is None else np.asarray(initial, dtype=float)
    q_values = _window_q(problem, q, start_level, stop_level)

    def source(level, q_at_t):
        return _source_vector(problem, q_at_t, level)

    return _march(problem, q_values, start_level, stop_level, initial, source, problem.theta)


def solve_auxiliary_phi(problem: ProblemSpec, start_level=0, stop_level=None, initial=None):
    """Phi: operator A_0, source f_0, boundary datum g."""
    return solve_forward(problem, None, start_level, stop_level, initial)


def reduced_source(problem: ProblemSpec, q_at_t, phi_values, level: int) -> np.ndarray:
    """sum_{i>r} q_i f_i - sum_{i<=r} q_i A_i Phi on interior rows, zero on boundary rows."""
    samples = problem.samples
    rhs = np.zeros(problem.grid.n_nodes)
    for m in range(problem.s - problem.r):
        rhs += q_at_t[problem.r + m] * samples.source_modes[m, level]
    for i in range(problem.r):
        if q_at_t[i] != 0.0:
            rhs -= q_at_t[i] * (mode_operator_matrix(problem, i + 1, level) @ phi_values)
    rhs[problem.grid.boundary_index] = 0.0
    return rhs


def solve_reduced(problem: ProblemSpec, q: QTrajectory, phi: StateField) -> StateField:
    """v over the levels of ``phi``: operator A(q), zero initial and boundary data."""
    start_level, stop_level = phi.start_level, phi.stop_level
    q_values = _window_q(problem, q, start_level, stop_level)

    def source(level, q_at_t):
        return reduced_source(problem, q_at_t, phi.at(level), level)

    initial = np.zeros(problem.grid.n_nodes)
    return _march(problem, q_values, start_level, stop_level, initial, source, problem.theta)


def theta_residual(problem: ProblemSpec, q: QTrajectory, u: StateField) -> np.ndarray:
    """Max-norm residual of the discrete scheme for each step of ``u``."""
    q_values = _window_q(problem, q, u.start_level, u.stop_level)
    residuals = []
    for k, level in enumerate(range(u.start_level + 1, u.stop_level + 1), start=1):
        matrix_now = _spatial_matrix(problem, q_values[:, k - 1], level - 1)
        matrix_next = _spatial_matrix(problem, q_values[:, k], level)
        system, rhs = _theta_system(
            problem,
            problem.theta,
            problem.time_grid.dt,
            matrix_next,
            _source_vector(problem, q_values[:, k], level),
            matrix_now,
            _source_vector(problem, q_values[:, k - 1], level - 1),
            u.values[k - 1],
        )
        residuals.append(float(np.max(np.abs(system @ u.values[k] - rhs))))
    return np.array(residuals)
