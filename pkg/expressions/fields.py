"""Coefficient fields: parsed expressions or tabulated data sampled on grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from expressions.parser import EvaluationError, Expr, Number, evaluate, parse

TABLE_AXES = ("t", "x", "y")
_COVERAGE_SLACK = 1e-12


class FieldCoverageError(ValueError):
    """A tabulated field was queried outside the span of its axes."""


@dataclass(frozen=True, eq=False)
class Table:
    """Values on a rectilinear lattice; ``axes`` maps axis name to strictly increasing knots."""

    axes: tuple[tuple[str, np.ndarray], ...]
    values: np.ndarray

    def __post_init__(self):
        names = [name for name, _ in self.axes]
        if not names:
            raise ValueError("table needs at least one axis")
        if len(set(names)) != len(names) or any(name not in TABLE_AXES for name in names):
            raise ValueError(f"table axes must be distinct names from {TABLE_AXES}, got {names}")
        shape = []
        axes = []
        for name, knots in self.axes:
            knots = np.array(knots, dtype=float)
            if knots.ndim != 1 or knots.size < 2:
                raise ValueError(f"table axis {name!r} needs at least two knots")
            if not np.all(np.diff(knots) > 0) or not np.all(np.isfinite(knots)):
                raise ValueError(f"table axis {name!r} must be finite and strictly increasing")
            knots.setflags(write=False)
            axes.append((name, knots))
            shape.append(knots.size)
        values = np.array(self.values, dtype=float)
        if values.shape != tuple(shape):
            raise ValueError(f"table values have shape {values.shape}, axes imply {tuple(shape)}")
        if not np.all(np.isfinite(values)):
            raise ValueError("table values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "axes", tuple(axes))
        object.__setattr__(self, "values", values)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    def evaluate(self, coords: dict[str, np.ndarray]) -> np.ndarray:
        points = []
        for name, knots in self.axes:
            value = coords.get(name)
            if value is None:
                raise EvaluationError(f"table axis {name!r} is not available here")
            value = np.asarray(value, dtype=float)
            low, high = knots[0], knots[-1]
            slack = _COVERAGE_SLACK * max(1.0, abs(low), abs(high))
            if np.any(value < low - slack) or np.any(value > high + slack):
                raise FieldCoverageError(
                    f"table axis {name!r} spans [{low:.6g}, {high:.6g}] but was queried at "
                    f"[{float(np.min(value)):.6g}, {float(np.max(value)):.6g}]"
                )
            points.append(np.clip(value, low, high))
        points = np.broadcast_arrays(*points)
        if len(points) == 1:
            _, knots = self.axes[0]
            return np.interp(points[0], knots, self.values)
        interpolator = RegularGridInterpolator(
            tuple(knots for _, knots in self.axes), self.values, method="linear", bounds_error=True
        )
        stacked = np.stack([p.ravel() for p in points], axis=-1)
        return interpolator(stacked).reshape(points[0].shape)


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """A scalar field of (t, x, y) given by an expression or a table."""

    expression: Expr | None = None
    table: Table | None = None
    source: str = field(default="")

    def __post_init__(self):
        if (self.expression is None) == (self.table is None):
            raise ValueError("a field is either an expression or a table")

    @classmethod
    def from_text(cls, text: str) -> "FieldSpec":
        return cls(expression=parse(text), source=text)

    @classmethod
    def constant(cls, value: float) -> "FieldSpec":
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("constant field must be finite")
        return cls(expression=Number(value), source=repr(value))

    @classmethod
    def from_table(cls, axes: dict[str, np.ndarray], values) -> "FieldSpec":
        table = Table(tuple(axes.items()), values)
        return cls(table=table, source=f"table[{','.join(table.names)}]")

    @property
    def variables(self) -> frozenset[str]:
        if self.expression is not None:
            return self.expression.variables()
        return frozenset(self.table.names)

    def evaluate(self, t=None, x=None, y=None):
        if self.expression is not None:
            return evaluate(self.expression, t=t, x=x, y=y)
        return self.table.evaluate({"t": t, "x": x, "y": y})


def _spatial_coords(grid, nodes):
    points = grid.coordinates if nodes is None else grid.coordinates[nodes]
    x = points[:, 0]
    y = points[:, 1] if grid.dim == 2 else None
    return x, y


def _check_dimension(spec: FieldSpec, grid):
    if grid.dim == 1 and "y" in spec.variables:
        raise EvaluationError(f"field {spec.source!r} references y in a 1-D problem")


def sample_field(spec: FieldSpec, grid, time_grid, nodes=None) -> np.ndarray:
    """Sample ``spec`` at every (level, node); ``nodes`` restricts to a node subset."""
    _check_dimension(spec, grid)
    x, y = _spatial_coords(grid, nodes)
    t = time_grid.times[:, None]
    values = spec.evaluate(t=t, x=x[None, :], y=None if y is None else y[None, :])
    return np.array(np.broadcast_to(values, (t.shape[0], x.shape[0])), dtype=float)


def sample_spatial(spec: FieldSpec, grid, nodes=None, time: float = 0.0) -> np.ndarray:
    _check_dimension(spec, grid)
    x, y = _spatial_coords(grid, nodes)
    values = spec.evaluate(t=np.full(x.shape, float(time)), x=x, y=y)
    return np.array(np.broadcast_to(values, x.shape), dtype=float)


def sample_series(spec: FieldSpec, time_grid) -> np.ndarray:
    extra = spec.variables - {"t"}
    if extra:
        raise EvaluationError(f"time series {spec.source!r} depends on {sorted(extra)}")
    times = time_grid.times
    values = spec.evaluate(t=times)
    return np.array(np.broadcast_to(values, times.shape), dtype=float)
