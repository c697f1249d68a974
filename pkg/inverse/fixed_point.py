"""
Picard iteration for q = R(q) on one time window.

With Phi the auxiliary solution and v the reduced solution for a given q,
psi~_j = psi_j - <Phi, phi_j> and H_j = psi~_j' + <A(q)v, phi_j>. On the grid the
relation is taken one step of the time-stepping scheme at a time. At boundary nodes v
misses the traced equation by a defect d(v), and with D the level difference

    H^{n+1} = D psi~^{n+1} + <A(q)v, phi>_theta^{n+1} - <d(v), phi>^{n+1}
    theta B0^{n+1} R^{n+1} + (1 - theta) B0^n R^n = H^{n+1}

where <.>_theta weights the new level by theta and the old one by 1 - theta. The
operator traces of v cancel against the ones inside the defect, which leaves

    H^{n+1} = theta B0^{n+1} q^{n+1} + (1 - theta) B0^n q^n + D(psi~ - <v, phi>)^{n+1}.

Data produced by the scheme therefore has its own coefficients as an exact fixed
point. The first level of a window does not enter a theta = 1 step: it is carried
over from the previous window or extrapolated from the levels after it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import uniform_filter1d

from forward.solver import SolverError, solve_auxiliary_phi, solve_reduced
from inverse.solvability import DET_FLOOR_REL, B0Matrix, build_B0
from problems.model import ProblemSpec, QTrajectory, StateField
from traces.boundary import pair_with_weights

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50
DIVERGENCE_PATIENCE = 3
EXTRAPOLATION_POINTS = 4
STENCILS = ("backward", "centered")


class ConvergenceError(RuntimeError):
    """``kind`` is "max_iter" or "divergence"; ``q`` is the last iterate."""

    def __init__(self, message: str, kind: str, increments, q=None, report=None):
        super().__init__(message)
        self.kind = kind
        self.increments = list(increments)
        self.q = q
        self.report = report


def window_norm(values, times, p: int = 2) -> float:
    """Sum over components of the trapezoid L_p norm in time."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    integrals = trapezoid(np.abs(values) ** p, times, axis=1)
    return float(np.sum(integrals ** (1.0 / p)))


def _pairing(problem: ProblemSpec, field: StateField) -> np.ndarray:
    """(s, levels) <field, phi_j> over the levels of ``field``."""
    grid = problem.grid
    traces = field.values[:, grid.boundary_index]
    return np.atleast_2d(pair_with_weights(traces, problem.samples.weights, grid).T)


def psi_tilde(problem: ProblemSpec, phi: StateField) -> np.ndarray:
    """(s, levels) psi_j - <Phi, phi_j> over the levels of ``phi``."""
    measured = problem.samples.measured
    if measured is None:
        raise ValueError(f"problem {problem.name!r} has no measured data")
    levels = slice(phi.start_level, phi.stop_level + 1)
    return measured[:, levels] - _pairing(problem, phi)


def _differentiate(series: np.ndarray, dt: float, stencil: str) -> np.ndarray:
    if stencil == "centered":
        return np.gradient(series, dt, axis=1, edge_order=2)
    derivative = np.empty_like(series)
    derivative[:, 1:] = np.diff(series, axis=1) / dt
    derivative[:, 0] = (-3.0 * series[:, 0] + 4.0 * series[:, 1] - series[:, 2]) / (2.0 * dt)
    return derivative


def psi_tilde_derivative(
    problem: ProblemSpec, phi: StateField, smoothing_width: int = 1, stencil: str = "backward"
):
    """
    Time derivative of psi~, after an optional moving average of odd width.

    ``backward`` takes the level differences of the time-stepping scheme, which the
    fixed-point map is built on, with a second-order one-sided value at the first
    level. ``centered`` is second order everywhere: centered inside, one-sided at
    both window ends.
    """
    if len(phi.times) < 3:
        raise ValueError("a window needs at least 3 time levels")
    if stencil not in STENCILS:
        raise ValueError(f"stencil must be one of {STENCILS}, got {stencil!r}")
    smoothing_width = int(smoothing_width)
    if smoothing_width < 1 or smoothing_width % 2 == 0:
        raise ValueError(f"smoothing width must be a positive odd integer, got {smoothing_width}")
    series = psi_tilde(problem, phi)
    if smoothing_width > 1:
        series = uniform_filter1d(series, size=smoothing_width, axis=1, mode="nearest")
    return _differentiate(series, problem.time_grid.dt, stencil)


@dataclass(frozen=True, eq=False)
class WindowSetup:
    problem: ProblemSpec
    phi: StateField
    b0: B0Matrix
    psi_prime: np.ndarray
    q_start: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.phi.times

    @property
    def start_level(self) -> int:
        return self.phi.start_level


def _checked_start(problem: ProblemSpec, q_start):
    if q_start is None:
        return None
    q_start = np.asarray(q_start, dtype=float)
    if q_start.shape != (problem.s,) or not np.all(np.isfinite(q_start)):
        raise ValueError(f"q_start must hold {problem.s} finite values")
    return q_start


def prepare_window(
    problem: ProblemSpec,
    start_level: int = 0,
    stop_level: int | None = None,
    initial=None,
    smoothing_width: int = 1,
    det_floor_rel: float = DET_FLOOR_REL,
    q_start=None,
) -> WindowSetup:
    """Solve Phi from ``initial`` and build B0 and psi~' on the window."""
    q_start = _checked_start(problem, q_start)
    phi = solve_auxiliary_phi(problem, start_level, stop_level, initial)
    b0 = build_B0(phi, problem, det_floor_rel)
    psi_prime = psi_tilde_derivative(problem, phi, smoothing_width)
    return WindowSetup(problem=problem, phi=phi, b0=b0, psi_prime=psi_prime, q_start=q_start)


def _extrapolate_first(later: np.ndarray) -> np.ndarray:
    """Value at the level before ``later[0]`` from the polynomial through the next levels."""
    count = min(EXTRAPOLATION_POINTS, len(later))
    weights = np.array([(-1.0) ** m * math.comb(count, m + 1) for m in range(count)])
    return weights @ later[:count]


def _solve_levels(setup: WindowSetup, h: np.ndarray) -> np.ndarray:
    """(levels, s) values R^n from theta B0^{n+1} R^{n+1} + (1 - theta) B0^n R^n = H^{n+1}."""
    theta = setup.problem.theta
    matrices = setup.b0.matrices
    solved = np.empty((len(matrices), setup.problem.s))
    if theta == 1.0:
        solved[1:] = np.linalg.solve(matrices[1:], h[..., None])[..., 0]
        solved[0] = setup.q_start if setup.q_start is not None else _extrapolate_first(solved[1:])
        return solved
    # v vanishes at the first level, so there H reduces to psi~'
    if setup.q_start is not None:
        solved[0] = setup.q_start
    else:
        solved[0] = np.linalg.solve(matrices[0], setup.psi_prime[:, 0])
    for n in range(1, len(matrices)):
        rhs = h[n - 1] - (1.0 - theta) * (matrices[n - 1] @ solved[n - 1])
        solved[n] = np.linalg.solve(theta * matrices[n], rhs)
    return solved


def fixed_point_step(q: QTrajectory, setup: WindowSetup) -> tuple[QTrajectory, StateField]:
    """R(q) together with the reduced solution v it was computed from."""
    problem = setup.problem
    theta = problem.theta
    try:
        v = solve_reduced(problem, q, setup.phi)
    except SolverError as exc:
        raise ConvergenceError(f"reduced solve failed: {exc}", "divergence", []) from exc
    applied = np.einsum("lij,jl->li", setup.b0.matrices, q.values)
    pairing_rate = np.diff(_pairing(problem, v), axis=1) / problem.time_grid.dt
    mismatch = setup.psi_prime[:, 1:] - pairing_rate
    h = theta * applied[1:] + (1.0 - theta) * applied[:-1] + mismatch.T
    try:
        solved = _solve_levels(setup, h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"B0 solve failed: {exc}", "divergence", []) from exc
    if not np.all(np.isfinite(solved)):
        raise ConvergenceError("fixed-point map produced non-finite values", "divergence", [])
    return QTrajectory(solved.T, setup.times, setup.start_level), v


def evaluate_R(
    q: QTrajectory,
    problem: ProblemSpec,
    phi: StateField,
    b0: B0Matrix,
    psi_prime=None,
    q_start=None,
):
    """R(q) on the window of ``phi``."""
    if psi_prime is None:
        psi_prime = psi_tilde_derivative(problem, phi)
    setup = WindowSetup(
        problem=problem,
        phi=phi,
        b0=b0,
        psi_prime=psi_prime,
        q_start=_checked_start(problem, q_start),
    )
    return fixed_point_step(q, setup)[0]


class PicardResult(NamedTuple):
    q: QTrajectory
    v: StateField
    report: dict
    phi: StateField
    b0: B0Matrix


def _growing(increments, patience) -> bool:
    if len(increments) <= patience:
        return False
    tail = increments[-(patience + 1) :]
    return all(b > a for a, b in zip(tail, tail[1:]))


def _ratios(increments):
    return [b / a if a > 0 else None for a, b in zip(increments, increments[1:])]


def picard_solve(
    problem: ProblemSpec,
    start_level: int = 0,
    stop_level: int | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    initial=None,
    norm_p: int = 2,
    smoothing_width: int = 1,
    det_floor_rel: float = DET_FLOOR_REL,
    divergence_patience: int = DIVERGENCE_PATIENCE,
    q_start=None,
) -> PicardResult:
    """
    q^0 = R(0), q^{k+1} = R(q^k) until ||q^{k+1} - q^k|| <= tol * max(1, ||q^{k+1}||).
    ``q_start`` pins the coefficients at the first level of the window.

    Raises ConvergenceError after ``max_iter`` evaluations or when the increments grow
    ``divergence_patience`` times in a row.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if norm_p < 2 or norm_p % 2:
        raise ValueError(f"norm_p must be an even integer >= 2, got {norm_p}")

    setup = prepare_window(
        problem, start_level, stop_level, initial, smoothing_width, det_floor_rel, q_start
    )
    times = setup.times
    window = {
        "start_level": setup.start_level,
        "stop_level": setup.phi.stop_level,
        "t_start": float(times[0]),
        "t_end": float(times[-1]),
    }

    def norm(values):
        return window_norm(values, times, norm_p)

    zero = QTrajectory.zeros(problem.s, problem.time_grid, setup.start_level, setup.phi.stop_level)
    q, _ = fixed_point_step(zero, setup)
    initial_norm = norm(q.values)
    increments = []

    def report(converged, iterations, residual=None):
        return {
            "window": window,
            "converged": converged,
            "iterations": iterations,
            "increments": list(increments),
            "contraction_ratios": _ratios(increments),
            "initial_map_norm": initial_norm,
            "fixed_point_residual": residual,
            "tol": tol,
            "norm_p": norm_p,
            "b0": setup.b0.summary(),
        }

    for iteration in range(1, max_iter + 1):
        try:
            q_next, _ = fixed_point_step(q, setup)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"window {window}: {exc}", "divergence", increments, q, report(False, iteration)
            ) from exc
        increment = norm(q_next.values - q.values)
        increments.append(increment)
        logger.debug(f"iteration {iteration}: increment {increment:.3e}")
        if not np.isfinite(increment):
            raise ConvergenceError(
                f"non-finite increment in window {window}",
                "divergence",
                increments,
                q,
                report(False, iteration),
            )
        if increment <= tol * max(1.0, norm(q_next.values)):
            q = q_next
            break
        if _growing(increments, divergence_patience):
            raise ConvergenceError(
                f"increments grew {divergence_patience} times in a row in window {window}",
                "divergence",
                increments,
                q_next,
                report(False, iteration),
            )
        q = q_next
    else:
        raise ConvergenceError(
            f"no convergence within {max_iter} iterations in window {window}",
            "max_iter",
            increments,
            q,
            report(False, max_iter),
        )

    mapped, v = fixed_point_step(q, setup)
    residual = norm(mapped.values - q.values)
    logger.info(
        f"window t=[{window['t_start']:.6g}, {window['t_end']:.6g}] converged in {iteration} "
        f"iteration(s), fixed-point residual {residual:.3e}"
    )
    return PicardResult(
        q=q, v=v, report=report(True, iteration, residual), phi=setup.phi, b0=setup.b0
    )
