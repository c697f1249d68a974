"""Problem files: JSON -> pydantic model -> compiled fields -> ProblemSpec."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from discretization.grid import GridError, build_grid, build_time_grid
from expressions.fields import FieldCoverageError, FieldSpec
from expressions.parser import EvaluationError, ExpressionSyntaxError
from problems.model import (
    BoundaryConditionSpec,
    MeasurementSpec,
    OperatorSpec,
    ProblemSpec,
    ProblemValidationError,
)
from problems.schema import ProblemFile, TableModel
from problems.settings import load_defaults
from problems.validation import audit_problem

logger = logging.getLogger(__name__)

SPATIAL = frozenset({"t", "x", "y"})
STATIC = frozenset({"x", "y"})
SERIES = frozenset({"t"})


def read_problem_file(path) -> dict:
    """Raw JSON payload; OSError propagates for missing or unreadable files."""
    with open(Path(path), "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ProblemValidationError(
                [
                    {
                        "condition": "schema",
                        "field": "",
                        "message": (
                            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
                        ),
                    }
                ]
            ) from exc


def _schema_violations(exc: ValidationError) -> list[dict]:
    return [
        {
            "condition": "schema",
            "field": ".".join(str(part) for part in err["loc"]),
            "message": f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}",
        }
        for err in exc.errors()
    ]


class _Compiler:
    """Turns raw field values into FieldSpecs, collecting every error instead of stopping."""

    def __init__(self, dim: int):
        self.dim = dim
        self.violations = []

    def field(self, value, path: str, allowed=SPATIAL) -> FieldSpec | None:
        allowed = allowed if self.dim == 2 else allowed - {"y"}
        try:
            if isinstance(value, TableModel):
                spec = FieldSpec.from_table(value.axes, value.values)
            elif isinstance(value, str):
                spec = FieldSpec.from_text(value)
            else:
                spec = FieldSpec.constant(value)
        except ExpressionSyntaxError as exc:
            self.violations.append(
                {
                    "condition": "expression_syntax",
                    "field": path,
                    "offset": exc.offset,
                    "message": f"{path}: {exc}",
                }
            )
            return None
        except ValueError as exc:
            self.violations.append(
                {"condition": "field", "field": path, "message": f"{path}: {exc}"}
            )
            return None
        extra = spec.variables - allowed
        if extra:
            self.violations.append(
                {
                    "condition": "field_variables",
                    "field": path,
                    "message": f"{path} may only use {sorted(allowed)}, found {sorted(extra)}",
                }
            )
            return None
        return spec

    def fields(self, values, path: str, allowed=SPATIAL):
        return tuple(self.field(v, f"{path}.{i}", allowed) for i, v in enumerate(values))


def _diffusion_matrix(compiler: _Compiler, raw, dim: int):
    if isinstance(raw, list):
        if len(raw) != dim or any(not isinstance(row, list) or len(row) != dim for row in raw):
            compiler.violations.append(
                {
                    "condition": "schema",
                    "field": "operator.diffusion",
                    "message": f"operator.diffusion must be a scalar or a {dim}x{dim} matrix",
                }
            )
            return None
        return tuple(
            tuple(compiler.field(v, f"operator.diffusion.{k}.{l}") for l, v in enumerate(row))
            for k, row in enumerate(raw)
        )
    scalar = compiler.field(raw, "operator.diffusion")
    zero = FieldSpec.constant(0.0)
    return tuple(tuple(scalar if k == l else zero for l in range(dim)) for k in range(dim))


def _check_lengths(compiler: _Compiler, model: ProblemFile, dim: int):
    checks = [("boundary.conormal", len(model.boundary.conormal), dim)]
    if model.operator.drift is not None:
        checks.append(("operator.drift", len(model.operator.drift), dim))
    for i, mode in enumerate(model.operator.modes):
        checks.append((f"operator.modes.{i}.drift", len(mode.drift), dim))
    s = len(model.operator.modes) + len(model.source.modes)
    checks.append(("measurement.weights", len(model.measurement.weights), s))
    if model.measurement.data is not None:
        checks.append(("measurement.data", len(model.measurement.data), s))
    if model.truth is not None:
        checks.append(("truth", len(model.truth), s))
    for path, found, expected in checks:
        if found != expected:
            compiler.violations.append(
                {
                    "condition": "schema",
                    "field": path,
                    "message": f"{path} has {found} entries, expected {expected}",
                }
            )
    if s < 1:
        compiler.violations.append(
            {
                "condition": "schema",
                "field": "source.modes",
                "message": "at least one operator mode or source mode is required",
            }
        )


def compile_problem(model: ProblemFile, grid=None, steps=None, theta=None, defaults=None):
    """Returns (ProblemSpec or None, violations)."""
    defaults = defaults or load_defaults()
    dim = len(model.domain.extents)
    compiler = _Compiler(dim)
    _check_lengths(compiler, model, dim)
    if compiler.violations:
        return None, compiler.violations

    op = model.operator
    diffusion = _diffusion_matrix(compiler, op.diffusion, dim)
    drift = compiler.fields(op.drift or [0.0] * dim, "operator.drift")
    reaction = compiler.field(op.reaction, "operator.reaction")
    mode_drift = tuple(
        compiler.fields(mode.drift, f"operator.modes.{i}.drift") for i, mode in enumerate(op.modes)
    )
    mode_reaction = tuple(
        compiler.field(mode.reaction, f"operator.modes.{i}.reaction")
        for i, mode in enumerate(op.modes)
    )
    conormal = compiler.fields(model.boundary.conormal, "boundary.conormal")
    transfer = compiler.field(model.boundary.transfer, "boundary.transfer")
    data = compiler.field(model.boundary.data, "boundary.data")
    base_source = compiler.field(model.source.base, "source.base")
    source_modes = compiler.fields(model.source.modes, "source.modes")
    initial = compiler.field(model.initial, "initial", STATIC)
    weights = compiler.fields(model.measurement.weights, "measurement.weights", STATIC)
    measured = None
    if model.measurement.data is not None:
        measured = compiler.fields(model.measurement.data, "measurement.data", SERIES)
    truth = compiler.fields(model.truth or [], "truth", SERIES)
    exact = None
    if model.exact_solution is not None:
        exact = compiler.field(model.exact_solution, "exact_solution")
    if compiler.violations:
        return None, compiler.violations

    counts = tuple(model.domain.nodes)
    if grid is not None:
        counts = tuple(int(c) for c in grid)
        if len(counts) != dim:
            return None, [
                {
                    "condition": "override",
                    "field": "grid",
                    "message": f"--grid needs {dim} node count(s), got {len(counts)}",
                }
            ]
    validation = defaults["validation"]
    try:
        spec = ProblemSpec(
            name=model.name,
            description=model.description,
            operator=OperatorSpec(diffusion, drift, reaction, mode_drift, mode_reaction),
            boundary=BoundaryConditionSpec(conormal, transfer, data),
            base_source=base_source,
            source_modes=source_modes,
            initial=initial,
            measurement=MeasurementSpec(
                weights=weights,
                data=measured,
                compat_tol=model.measurement.compat_tol or validation["compat_tol"],
            ),
            grid=build_grid(model.domain.extents, counts),
            time_grid=build_time_grid(model.time.horizon, steps or model.time.steps),
            theta=theta if theta is not None else (model.time.theta or defaults["solver"]["theta"]),
            boundary_compat_tol=model.boundary_compat_tol or validation["boundary_compat_tol"],
            truth=truth,
            exact_solution=exact,
        )
    except (EvaluationError, FieldCoverageError, GridError) as exc:
        return None, [{"condition": "evaluation", "message": str(exc)}]
    except ValueError as exc:
        return None, [{"condition": "structure", "message": str(exc)}]
    return spec, []


def inspect_problem(path, grid=None, steps=None, theta=None, defaults=None) -> tuple:
    """
    (spec or None, audit) without raising on content problems. The audit always
    carries a ``violations`` list; file errors (OSError) still propagate.
    """
    defaults = defaults or load_defaults()
    try:
        payload = read_problem_file(path)
        model = ProblemFile.model_validate(payload)
    except ProblemValidationError as exc:
        return None, {"violations": exc.violations, "warnings": []}
    except ValidationError as exc:
        return None, {"violations": _schema_violations(exc), "warnings": []}
    spec, violations = compile_problem(model, grid, steps, theta, defaults)
    if spec is None:
        return None, {"violations": violations, "warnings": []}
    return spec, audit_problem(spec, det_floor_rel=defaults["inverse"]["det_floor_rel"])


def load_problem(path, grid=None, steps=None, theta=None, defaults=None) -> ProblemSpec:
    """Parsed and validated problem; raises ProblemValidationError listing every violation."""
    spec, audit = inspect_problem(path, grid, steps, theta, defaults)
    if audit["violations"]:
        raise ProblemValidationError(audit["violations"])
    for warning in audit["warnings"]:
        logger.warning(warning["message"])
    logger.info(f"loaded problem {spec.name!r}: r={spec.r}, s={spec.s}, grid {spec.grid.counts}")
    return spec


def problem_from_dict(payload: dict, grid=None, steps=None, theta=None, defaults=None):
    """ProblemSpec from an in-memory payload; structural violations raise."""
    try:
        model = ProblemFile.model_validate(payload)
    except ValidationError as exc:
        raise ProblemValidationError(_schema_violations(exc)) from exc
    spec, violations = compile_problem(model, grid, steps, theta, defaults)
    if violations:
        raise ProblemValidationError(violations)
    return spec
