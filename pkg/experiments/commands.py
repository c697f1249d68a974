"""
Subcommand implementations behind run.py.

Each ``run_*`` returns the report dict it wrote; ``execute`` maps exceptions onto the
exit-code contract and still writes report.json on failure when it can.
"""

from __future__ import annotations

import logging
import os
import platform
import time
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import pandas as pd
import pydantic
import scipy
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from evals.convergence_study import MIN_LEVELS, StudyAborted, run_convergence_study
from evals.noise_study import run_noise_study
from expressions.fields import sample_field
from forward.solver import SolverError, solve_forward, theta_residual
from inverse.continuation import ContinuationError, WindowPolicy, windowed_solve
from inverse.fixed_point import ConvergenceError
from problems.loader import inspect_problem, load_problem
from problems.model import ProblemValidationError, QTrajectory
from problems.settings import load_defaults
from reporting.artifacts import (
    SCHEMA_VERSION,
    file_checksum,
    render_inverse_summary_markdown,
    write_json,
    write_markdown,
    write_series_csv,
    write_state_csv,
    write_table_csv,
    write_trajectory_csv,
)
from synth.measurements import SynthConfig, generate_measurements
from synth.scoring import score
from traces.boundary import pair_with_weights

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGENCE = 2
EXIT_IO = 3

COMMANDS = ("check", "forward", "synth", "invert", "study")


class ConfigError(ValueError):
    pass


class OutputDirectoryError(OSError):
    pass


class RunConfig(BaseModel):
    """Flags layered over config/defaults.yaml; ``None`` flags take the YAML value."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal["check", "forward", "synth", "invert", "study"]
    problem_path: str
    out_dir: str
    grid: Optional[tuple[int, ...]] = None
    steps: Optional[int] = Field(default=None, ge=1)
    theta: Optional[float] = None
    tol: float = Field(gt=0)
    max_iter: int = Field(ge=1)
    window_policy: str
    max_halvings: int = Field(ge=0)
    det_floor_rel: float = Field(gt=0)
    divergence_patience: int = Field(ge=1)
    noise: float = Field(ge=0)
    seed: int = Field(ge=0)
    oversample: int = Field(ge=1)
    inverse_crime: bool = False
    emit_solution: bool = False
    smoothing: int = Field(ge=1)
    norm_p: int = Field(ge=2)
    levels: int = Field(ge=1)
    study: Literal["forward", "reconstruction", "both", "noise"]
    noise_levels: tuple[float, ...]
    seeds: int = Field(ge=1)

    @field_validator("grid")
    @classmethod
    def _grid_counts(cls, grid):
        if grid is not None and (not 1 <= len(grid) <= 2 or any(n < 3 for n in grid)):
            raise ValueError("--grid takes one or two node counts, each >= 3")
        return grid

    @field_validator("theta")
    @classmethod
    def _theta(cls, theta):
        if theta is not None and theta not in (1.0, 0.5):
            raise ValueError("--theta must be 1 or 0.5")
        return theta

    @field_validator("window_policy")
    @classmethod
    def _policy(cls, policy):
        WindowPolicy.parse(policy)
        return policy

    @field_validator("smoothing")
    @classmethod
    def _odd(cls, width):
        if width % 2 == 0:
            raise ValueError("--smoothing must be odd")
        return width

    @field_validator("norm_p")
    @classmethod
    def _even(cls, p):
        if p % 2:
            raise ValueError("--norm-p must be even")
        return p

    @classmethod
    def from_options(cls, options: dict, defaults: dict | None = None) -> "RunConfig":
        """Merge parsed flags over the YAML defaults; raises ConfigError."""
        defaults = defaults or load_defaults()
        inverse, synth, study = defaults["inverse"], defaults["synth"], defaults["study"]
        fallback = {
            "tol": inverse["tol"],
            "max_iter": inverse["max_iter"],
            "window_policy": inverse["window_policy"],
            "max_halvings": inverse["max_halvings"],
            "det_floor_rel": inverse["det_floor_rel"],
            "divergence_patience": inverse["divergence_patience"],
            "smoothing": inverse["smoothing_width"],
            "norm_p": inverse["norm_p"],
            "noise": synth["noise"],
            "seed": synth["seed"],
            "oversample": synth["oversample"],
            "levels": study["levels"],
            "study": study["kind"],
            "noise_levels": tuple(study["noise_levels"]),
            "seeds": study["seeds"],
        }
        merged = dict(fallback)
        merged.update({k: v for k, v in options.items() if v is not None})
        try:
            return cls(**merged)
        except ValidationError as exc:
            messages = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                for err in exc.errors()
            )
            raise ConfigError(messages) from exc

    def picard_options(self) -> dict:
        return {
            "norm_p": self.norm_p,
            "smoothing_width": self.smoothing,
            "det_floor_rel": self.det_floor_rel,
            "divergence_patience": self.divergence_patience,
        }

    def policy(self) -> WindowPolicy:
        return WindowPolicy.parse(self.window_policy, self.max_halvings)

    def echo(self) -> dict:
        return self.model_dump(mode="json", exclude={"out_dir"})


def versions() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


def prepare_out_dir(path) -> Path:
    """Create the output directory and confirm it is writable before any solve."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputDirectoryError(f"cannot create output directory {out}: {exc}") from exc
    if not out.is_dir() or not os.access(out, os.W_OK):
        raise OutputDirectoryError(f"output directory {out} is not writable")
    return out


def _base_report(cfg: RunConfig, spec=None) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": versions(),
    }
    if spec is not None:
        report["problem"] = spec.describe()
    return report


def _artifact_index(out: Path, names) -> dict:
    return {name: file_checksum(out / name) for name in names}


def _load(cfg: RunConfig):
    return load_problem(cfg.problem_path, cfg.grid, cfg.steps, cfg.theta)


def _synth_config(cfg: RunConfig, spec) -> SynthConfig:
    if not spec.truth:
        raise ConfigError(f"problem {spec.name!r} has no truth to generate measurements from")
    return SynthConfig(
        truth=spec.truth,
        oversample=cfg.oversample,
        noise_level=cfg.noise,
        seed=cfg.seed,
        inverse_crime=cfg.inverse_crime,
    )


def run_check(cfg: RunConfig, out: Path) -> dict:
    """Audit only. Content violations are part of the report, not a failure."""
    spec, audit = inspect_problem(cfg.problem_path, cfg.grid, cfg.steps, cfg.theta)
    report = _base_report(cfg, spec)
    report["audit"] = audit
    report["status"] = "pass" if not audit["violations"] else "fail"
    write_json(out / "report.json", report)
    logger.info(
        f"check: {len(audit['violations'])} violation(s), "
        f"{len(audit['warnings'])} warning(s)"
    )
    return report


def run_forward(cfg: RunConfig, out: Path) -> dict:
    spec = _load(cfg)
    tg = spec.time_grid
    q = QTrajectory.from_fields(spec.truth, tg) if spec.truth else QTrajectory.zeros(spec.s, tg)
    u = solve_forward(spec, q)
    grid = spec.grid
    psi = pair_with_weights(u.values[:, grid.boundary_index], spec.samples.weights, grid)

    write_state_csv(out / "u_forward.csv", u)
    write_series_csv(out / "psi_forward.csv", tg.times, psi.T, "psi")
    result = {
        "q_source": "truth" if spec.truth else "zero",
        "max_theta_residual": float(np.max(theta_residual(spec, q, u))),
        "exact_error": None,
    }
    if spec.exact_solution is not None:
        exact = sample_field(spec.exact_solution, grid, tg)
        result["exact_error"] = float(np.max(np.abs(u.values - exact)))
    report = _base_report(cfg, spec)
    report.update(
        status="ok",
        result=result,
        artifacts=_artifact_index(out, ["u_forward.csv", "psi_forward.csv"]),
    )
    write_json(out / "report.json", report)
    return report


def run_synth(cfg: RunConfig, out: Path) -> dict:
    spec = _load(cfg)
    measurement, truth = generate_measurements(spec, _synth_config(cfg, spec))
    psi = np.stack([row.evaluate(t=spec.time_grid.times) for row in measurement.data])
    write_series_csv(out / "psi_generated.csv", spec.time_grid.times, psi, "psi")
    write_trajectory_csv(out / "q_true.csv", truth)
    report = _base_report(cfg, spec)
    report.update(
        status="ok",
        result={
            "oversample": 1 if cfg.inverse_crime else cfg.oversample,
            "noise": cfg.noise,
            "inverse_crime": cfg.inverse_crime,
        },
        artifacts=_artifact_index(out, ["psi_generated.csv", "q_true.csv"]),
    )
    write_json(out / "report.json", report)
    return report


def run_invert(cfg: RunConfig, out: Path, timing: dict) -> dict:
    spec = _load(cfg)
    truth = None
    data_source = "file"
    if not spec.measurement.has_data:
        measurement, truth = generate_measurements(spec, _synth_config(cfg, spec))
        spec = spec.with_measurement(measurement)
        data_source = "synthesized"
        logger.info("no measured data in the problem file; synthesized it from the truth")
    elif spec.truth:
        truth = QTrajectory.from_fields(spec.truth, spec.time_grid)

    started = time.perf_counter()
    try:
        result = windowed_solve(
            spec, cfg.policy(), cfg.tol, cfg.max_iter, **cfg.picard_options()
        )
    finally:
        timing["solve_seconds"] = time.perf_counter() - started

    names = ["q_recovered.csv"]
    write_trajectory_csv(out / "q_recovered.csv", result.q)
    if cfg.emit_solution:
        write_state_csv(out / "u_final.csv", result.u)
        names.append("u_final.csv")
    report = _base_report(cfg, spec)
    report.update(status="converged", data_source=data_source, result=result.report)
    if truth is not None:
        report["score"] = score(result.q, truth)
    report["artifacts"] = _artifact_index(out, names)
    write_json(out / "report.json", report)
    write_markdown(out / "summary.md", render_inverse_summary_markdown(report))
    return report


def run_study(cfg: RunConfig, out: Path) -> dict:
    if cfg.study != "noise" and cfg.levels < MIN_LEVELS:
        raise ConfigError(f"--levels must be >= {MIN_LEVELS} to compute observed orders")
    spec = _load(cfg)
    options = dict(
        oversample=cfg.oversample,
        policy=cfg.policy(),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        **cfg.picard_options(),
    )
    report = _base_report(cfg, spec)
    if cfg.study == "noise":
        study = run_noise_study(
            spec, cfg.noise_levels, cfg.seeds, base_seed=cfg.seed, **options
        )
        write_table_csv(out / "study.csv", study["rows"])
    else:
        try:
            study = run_convergence_study(spec, cfg.levels, cfg.study, **options)
        except StudyAborted as exc:
            write_table_csv(out / "study.csv", exc.rows)
            raise
        write_table_csv(out / "study.csv", study["rows"])
    report.update(status="ok", result=study, artifacts=_artifact_index(out, ["study.csv"]))
    write_json(out / "report.json", report)
    return report


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StudyAborted):
        return exit_code_for(exc.cause)
    if isinstance(exc, (ConvergenceError, ContinuationError, SolverError)):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, ValueError):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def _failure(exc: BaseException) -> dict:
    failure = {"type": type(exc).__name__, "message": str(exc)}
    cause = getattr(exc, "cause", None)
    if cause is not None:
        failure["cause"] = {"type": type(cause).__name__, "message": str(cause)}
    for attr in ("violations", "level", "kind", "increments", "windows", "rows"):
        value = getattr(exc, attr, None)
        if value is not None:
            failure[attr] = value
    return failure


def _write_failure(cfg: RunConfig, out: Path, exc: BaseException, code: int):
    report = _base_report(cfg)
    report.update(status="failed", exit_code=code, failure=_failure(exc))
    partial_q = getattr(exc, "q", None)
    if isinstance(exc, ContinuationError) and partial_q is not None and partial_q.values.size:
        write_trajectory_csv(out / "q_partial.csv", partial_q)
        report["artifacts"] = _artifact_index(out, ["q_partial.csv"])
    write_json(out / "report.json", report)
    if cfg.command == "invert":
        write_markdown(out / "summary.md", render_inverse_summary_markdown(report))


def execute(options: dict, defaults: dict | None = None) -> int:
    """Run one subcommand from parsed flags and return its exit code."""
    try:
        cfg = RunConfig.from_options(options, defaults)
    except ConfigError as exc:
        logger.error(f"invalid configuration: {exc}")
        return EXIT_VALIDATION
    try:
        out = prepare_out_dir(cfg.out_dir)
    except OutputDirectoryError as exc:
        logger.error(str(exc))
        return EXIT_IO
    if not Path(cfg.problem_path).is_file():
        exc = FileNotFoundError(f"problem file not found: {cfg.problem_path}")
        logger.error(str(exc))
        _write_failure(cfg, out, exc, EXIT_IO)
        return EXIT_IO

    timing = {}
    started = time.perf_counter()
    try:
        if cfg.command == "check":
            run_check(cfg, out)
        elif cfg.command == "forward":
            run_forward(cfg, out)
        elif cfg.command == "synth":
            run_synth(cfg, out)
        elif cfg.command == "invert":
            run_invert(cfg, out, timing)
        else:
            run_study(cfg, out)
    except Exception as exc:
        code = exit_code_for(exc)
        if isinstance(exc, ProblemValidationError):
            for violation in exc.violations:
                logger.error(violation["message"])
        else:
            logger.error(f"{cfg.command} failed: {exc}")
        _write_failure(cfg, out, exc, code)
        return code
    finally:
        timing["total_seconds"] = time.perf_counter() - started
        write_json(out / "timing.json", timing)
    logger.info(f"{cfg.command}: artifacts written to {out}")
    return EXIT_OK
