"""Global recovery on [0, T] by solving consecutive windows and restarting from u(tau_k)."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from inverse.fixed_point import ConvergenceError, picard_solve
from inverse.verification import verify_solution
from problems.model import ProblemSpec, QTrajectory, StateField

logger = logging.getLogger(__name__)

MAX_HALVINGS = 6
MIN_WINDOW_STEPS = 2

_POLICY_RE = re.compile(r"^(single|adaptive|fixed:(\d+))$")


class ContinuationError(RuntimeError):
    """A window failed for good; ``q`` and ``u`` hold the windows solved before it."""

    def __init__(self, message: str, q=None, u=None, windows=None, cause=None):
        super().__init__(message)
        self.q = q
        self.u = u
        self.windows = list(windows or [])
        self.cause = cause


@dataclass(frozen=True)
class WindowPolicy:
    kind: str = "adaptive"
    count: int = 1
    max_halvings: int = MAX_HALVINGS

    def __post_init__(self):
        if self.kind not in ("single", "fixed", "adaptive"):
            raise ValueError(f"unknown window policy {self.kind!r}")
        if self.count < 1:
            raise ValueError("window count must be >= 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")

    @classmethod
    def parse(cls, text: str, max_halvings: int = MAX_HALVINGS) -> "WindowPolicy":
        match = _POLICY_RE.match(str(text).strip())
        if match is None:
            raise ValueError(f"window policy must be single, fixed:K or adaptive, got {text!r}")
        if match.group(2) is not None:
            return cls("fixed", int(match.group(2)), max_halvings)
        return cls(match.group(1), 1, max_halvings)

    def label(self) -> str:
        return f"fixed:{self.count}" if self.kind == "fixed" else self.kind


class ContinuationResult(NamedTuple):
    q: QTrajectory
    u: StateField
    report: dict


def _stitch(problem: ProblemSpec, q_parts, u_parts):
    if not q_parts:
        return None, None
    q_values = [q_parts[0].values] + [part.values[:, 1:] for part in q_parts[1:]]
    u_values = [u_parts[0].values] + [part.values[1:] for part in u_parts[1:]]
    stop = q_parts[-1].stop_level
    times = problem.time_grid.times[: stop + 1]
    q = QTrajectory(np.concatenate(q_values, axis=1), times, 0)
    u = StateField(np.concatenate(u_values, axis=0), problem.grid, times, 0)
    return q, u


def windowed_solve(
    problem: ProblemSpec,
    policy: WindowPolicy | str = "adaptive",
    tol: float = 1e-8,
    max_iter: int = 50,
    **picard_options,
) -> ContinuationResult:
    """
    Solve every window in order. Shared boundary levels keep the earlier window's
    values; each window restarts Phi from the stitched state at its first level and
    takes its first coefficient values from the window before it.
    """
    if isinstance(policy, str):
        policy = WindowPolicy.parse(policy)
    tg = problem.time_grid
    n_steps = tg.n_steps
    if n_steps < MIN_WINDOW_STEPS:
        raise ValueError(f"need at least {MIN_WINDOW_STEPS} time steps, got {n_steps}")
    planned = None
    if policy.kind == "fixed":
        planned = tg.with_windows(policy.count).window_bounds()
        if any(b - a < MIN_WINDOW_STEPS for a, b in planned):
            raise ValueError(
                f"{policy.count} windows leave fewer than {MIN_WINDOW_STEPS} steps each"
            )

    q_parts, u_parts, windows = [], [], []
    start, length, initial, q_start = 0, n_steps, None, None
    total_halvings = 0
    while start < n_steps:
        if planned is not None:
            stop = planned[len(q_parts)][1]
        else:
            stop = min(start + length, n_steps)
            if n_steps - stop < MIN_WINDOW_STEPS:
                stop = n_steps
        halvings = 0
        while True:
            try:
                result = picard_solve(
                    problem,
                    start,
                    stop,
                    tol,
                    max_iter,
                    initial=initial,
                    q_start=q_start,
                    **picard_options,
                )
                break
            except ConvergenceError as exc:
                attempt = exc.report or {"window": {"start_level": start, "stop_level": stop}}
                windows.append(dict(attempt, accepted=False, failure=exc.kind))
                shorter = (stop - start) // 2
                exhausted = halvings >= policy.max_halvings or shorter < MIN_WINDOW_STEPS
                if policy.kind != "adaptive" or exhausted:
                    q, u = _stitch(problem, q_parts, u_parts)
                    raise ContinuationError(
                        f"window [{start}, {stop}] failed ({exc.kind}) "
                        f"after {halvings} halving(s)",
                        q=q,
                        u=u,
                        windows=windows,
                        cause=exc,
                    ) from exc
                halvings += 1
                total_halvings += 1
                logger.warning(
                    f"window [{start}, {stop}] did not converge ({exc.kind}); retrying with "
                    f"{shorter} steps"
                )
                stop = start + shorter
                length = shorter

        u_window = StateField(
            result.v.values + result.phi.values, problem.grid, result.phi.times, start
        )
        q_parts.append(result.q)
        u_parts.append(u_window)
        windows.append(dict(result.report, accepted=True, halvings=halvings))
        initial = u_window.values[-1]
        q_start = result.q.values[:, -1]
        start = stop

    q, u = _stitch(problem, q_parts, u_parts)
    accepted = [w for w in windows if w["accepted"]]
    report = {
        "policy": policy.label(),
        "windows": windows,
        "window_count": len(accepted),
        "halvings": total_halvings,
        "iterations_total": int(sum(w["iterations"] for w in accepted)),
        "min_abs_det": float(min(w["b0"]["min_abs_det"] for w in accepted)),
        "max_condition": float(max(w["b0"]["max_condition"] for w in accepted)),
        "max_fixed_point_residual": float(max(w["fixed_point_residual"] for w in accepted)),
        "verification": verify_solution(u, q, problem),
    }
    return ContinuationResult(q=q, u=u, report=report)
