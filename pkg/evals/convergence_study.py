"""Observed orders of the forward scheme and of the reconstruction under refinement."""

from __future__ import annotations

import logging
import math

import numpy as np

from discretization.grid import refine, refine_time
from expressions.fields import sample_field
from forward.solver import solve_forward
from inverse.continuation import windowed_solve
from problems.model import ProblemSpec, QTrajectory
from synth.measurements import SynthConfig, generate_measurements
from synth.scoring import score

logger = logging.getLogger(__name__)

MIN_LEVELS = 3
STUDY_KINDS = ("forward", "reconstruction", "both")


class StudyAborted(RuntimeError):
    """A level failed; ``rows`` holds every level completed before it."""

    def __init__(self, message: str, rows, cause):
        super().__init__(message)
        self.rows = rows
        self.cause = cause


def refinement_levels(problem: ProblemSpec, levels: int) -> list[ProblemSpec]:
    """Level k refines space and time by 2**k; nodes of coarser levels are kept."""
    out = [problem]
    for k in range(1, levels):
        factor = 2**k
        out.append(
            problem.with_discretization(
                grid=refine(problem.grid, factor), time_grid=refine_time(problem.time_grid, factor)
            )
        )
    return out


def observed_orders(errors, spacings) -> list:
    """log(e_{k-1}/e_k) / log(h_{k-1}/h_k); None where either error is missing or zero."""
    orders = [None]
    for (e0, h0), (e1, h1) in zip(zip(errors, spacings), zip(errors[1:], spacings[1:])):
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
    return orders


def forward_error(problem: ProblemSpec) -> float:
    """Max nodal error over every level against the problem's exact solution."""
    if problem.exact_solution is None:
        raise ValueError(f"problem {problem.name!r} has no exact_solution for a forward study")
    q = (
        QTrajectory.from_fields(problem.truth, problem.time_grid)
        if problem.truth
        else QTrajectory.zeros(problem.s, problem.time_grid)
    )
    u = solve_forward(problem, q)
    exact = sample_field(problem.exact_solution, problem.grid, problem.time_grid)
    return float(np.max(np.abs(u.values - exact)))


def reconstruction_error(
    problem: ProblemSpec,
    oversample: int = 2,
    policy: str = "adaptive",
    tol: float = 1e-8,
    max_iter: int = 50,
    **picard_options,
) -> float:
    """Relative L2 error of q recovered from oversampled noiseless data."""
    if not problem.truth:
        raise ValueError(f"problem {problem.name!r} has no truth for a reconstruction study")
    measurement, truth = generate_measurements(
        problem, SynthConfig(truth=problem.truth, oversample=oversample)
    )
    result = windowed_solve(
        problem.with_measurement(measurement), policy, tol, max_iter, **picard_options
    )
    return score(result.q, truth)["l2"]


def run_convergence_study(
    problem: ProblemSpec,
    levels: int = MIN_LEVELS,
    kind: str = "both",
    oversample: int = 2,
    policy: str = "adaptive",
    tol: float = 1e-8,
    max_iter: int = 50,
    **picard_options,
) -> dict:
    """
    Rows per level with h, dt, errors and observed orders between consecutive levels.

    Raises StudyAborted (with the completed rows) when a level fails.
    """
    if levels < MIN_LEVELS:
        raise ValueError(f"a convergence study needs at least {MIN_LEVELS} levels, got {levels}")
    if kind not in STUDY_KINDS:
        raise ValueError(f"study kind must be one of {STUDY_KINDS}, got {kind!r}")
    do_forward = kind in ("forward", "both")
    do_reconstruction = kind in ("reconstruction", "both")

    rows = []
    for level, spec in enumerate(refinement_levels(problem, levels)):
        h = float(max(spec.grid.spacings))
        row = {
            "level": level,
            "nodes": int(spec.grid.n_nodes),
            "h": h,
            "dt": float(spec.time_grid.dt),
            "forward_error": None,
            "reconstruction_error": None,
        }
        try:
            if do_forward:
                row["forward_error"] = forward_error(spec)
            if do_reconstruction:
                row["reconstruction_error"] = reconstruction_error(
                    spec, oversample, policy, tol, max_iter, **picard_options
                )
        except Exception as exc:
            raise StudyAborted(f"level {level} failed: {exc}", rows, exc) from exc
        logger.info(
            f"level {level}: h={h:.4g} forward={row['forward_error']} "
            f"reconstruction={row['reconstruction_error']}"
        )
        rows.append(row)

    spacings = [row["h"] for row in rows]
    for key in ("forward", "reconstruction"):
        orders = observed_orders([row[f"{key}_error"] for row in rows], spacings)
        for row, order in zip(rows, orders):
            row[f"{key}_order"] = order

    return {
        "problem": problem.name,
        "kind": kind,
        "levels": levels,
        "rows": rows,
        "min_forward_order": _min_order(rows, "forward_order"),
        "min_reconstruction_order": _min_order(rows, "reconstruction_order"),
    }


def _min_order(rows, key):
    values = [row[key] for row in rows if row[key] is not None]
    return min(values) if values else None
