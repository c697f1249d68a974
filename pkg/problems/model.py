"""Problem definition, precomputed coefficient samples and solution containers."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from discretization.grid import SpatialGrid, TimeGrid
from expressions.fields import FieldSpec, sample_field, sample_series, sample_spatial

SUPPORTED_THETAS = (1.0, 0.5)
DEFAULT_COMPAT_TOL = 1e-6
DEFAULT_BOUNDARY_COMPAT_TOL = 1e-3


class ProblemValidationError(ValueError):
    """Carries every violation found, not only the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(v.get("message", v.get("condition", "?")) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {summary}")


@dataclass(frozen=True)
class OperatorSpec:
    """
    A_0 u = -sum_kl a_kl d_kl u + sum_k a_k d_k u + a_0 u, plus one first-order
    mode A_i u = sum_k a^i_k d_k u + a^i_0 u per unknown coefficient q_1..q_r.
    """

    diffusion: tuple[tuple[FieldSpec, ...], ...]
    drift: tuple[FieldSpec, ...]
    reaction: FieldSpec
    mode_drift: tuple[tuple[FieldSpec, ...], ...] = ()
    mode_reaction: tuple[FieldSpec, ...] = ()

    def __post_init__(self):
        n = len(self.diffusion)
        if n not in (1, 2) or any(len(row) != n for row in self.diffusion):
            raise ValueError("diffusion must be a 1x1 or 2x2 matrix of fields")
        if len(self.drift) != n:
            raise ValueError(f"drift needs {n} components")
        if len(self.mode_drift) != len(self.mode_reaction):
            raise ValueError("each operator mode needs drift and reaction parts")
        if any(len(row) != n for row in self.mode_drift):
            raise ValueError(f"mode drift needs {n} components")

    @property
    def dim(self) -> int:
        return len(self.diffusion)

    @property
    def r(self) -> int:
        return len(self.mode_reaction)


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """gamma . grad u + sigma u = g on the boundary."""

    conormal: tuple[FieldSpec, ...]
    transfer: FieldSpec
    data: FieldSpec


@dataclass(frozen=True)
class MeasurementSpec:
    weights: tuple[FieldSpec, ...]
    data: tuple[FieldSpec, ...] | None = None
    compat_tol: float = DEFAULT_COMPAT_TOL

    def __post_init__(self):
        if not self.weights:
            raise ValueError("at least one measurement weight is required")
        if self.data is not None and len(self.data) != len(self.weights):
            raise ValueError("measurement data and weights must have equal length")
        if not self.compat_tol > 0:
            raise ValueError("compat_tol must be positive")

    @property
    def has_data(self) -> bool:
        return self.data is not None


@dataclass(frozen=True, eq=False)
class ProblemSamples:
    """Every field evaluated once per (level, node); boundary fields per boundary node."""

    diffusion: np.ndarray
    drift: np.ndarray
    reaction: np.ndarray
    mode_drift: np.ndarray
    mode_reaction: np.ndarray
    source_base: np.ndarray
    source_modes: np.ndarray
    conormal: np.ndarray
    transfer: np.ndarray
    boundary_data: np.ndarray
    initial: np.ndarray
    weights: np.ndarray
    measured: np.ndarray | None
    ellipticity: np.ndarray
    non_tangency: np.ndarray
    asymmetry: float


def _stack(arrays, shape):
    if not arrays:
        return np.zeros(shape)
    return np.stack(arrays)


def sample_problem(spec: "ProblemSpec") -> ProblemSamples:
    grid, tg = spec.grid, spec.time_grid
    op, bc = spec.operator, spec.boundary
    n, levels, nodes = grid.dim, tg.n_levels, grid.n_nodes
    bnodes = grid.boundary_index

    def full(f):
        return sample_field(f, grid, tg)

    def edge(f):
        return sample_field(f, grid, tg, nodes=bnodes)

    diffusion = np.stack([np.stack([full(a) for a in row], axis=1) for row in op.diffusion], axis=1)
    drift = np.stack([full(a) for a in op.drift], axis=1)
    mode_drift = _stack(
        [np.stack([full(a) for a in row], axis=1) for row in op.mode_drift], (0, levels, n, nodes)
    )
    mode_reaction = _stack([full(a) for a in op.mode_reaction], (0, levels, nodes))
    source_modes = _stack([full(f) for f in spec.source_modes], (0, levels, nodes))
    conormal = np.stack([edge(g) for g in bc.conormal], axis=1)
    weights = np.stack([sample_spatial(w, grid, nodes=bnodes) for w in spec.measurement.weights])
    measured = None
    if spec.measurement.data is not None:
        measured = np.stack([sample_series(d, tg) for d in spec.measurement.data])

    sym = 0.5 * (diffusion + np.swapaxes(diffusion, 1, 2))
    eigen = np.linalg.eigvalsh(np.moveaxis(sym, (1, 2), (-2, -1)))
    ellipticity = eigen[..., 0].min(axis=-1)
    asymmetry = float(np.max(np.abs(diffusion - np.swapaxes(diffusion, 1, 2))))
    # |gamma . nu| against every edge normal met at a node, corners included
    alignment = np.abs(np.einsum("lkb,bek->lbe", conormal, grid.edge_normals))
    non_tangency = alignment.min(axis=(1, 2))

    return ProblemSamples(
        diffusion=diffusion,
        drift=drift,
        reaction=full(op.reaction),
        mode_drift=mode_drift,
        mode_reaction=mode_reaction,
        source_base=full(spec.base_source),
        source_modes=source_modes,
        conormal=conormal,
        transfer=edge(bc.transfer),
        boundary_data=edge(bc.data),
        initial=sample_spatial(spec.initial, grid),
        weights=weights,
        measured=measured,
        ellipticity=ellipticity,
        non_tangency=non_tangency,
        asymmetry=asymmetry,
    )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A discretized instance of the coefficient-recovery problem."""

    name: str
    operator: OperatorSpec
    boundary: BoundaryConditionSpec
    base_source: FieldSpec
    source_modes: tuple[FieldSpec, ...]
    initial: FieldSpec
    measurement: MeasurementSpec
    grid: SpatialGrid
    time_grid: TimeGrid
    theta: float = 1.0
    boundary_compat_tol: float = DEFAULT_BOUNDARY_COMPAT_TOL
    truth: tuple[FieldSpec, ...] = ()
    exact_solution: FieldSpec | None = None
    description: str = ""
    samples: ProblemSamples = field(init=False, repr=False)

    def __post_init__(self):
        if self.operator.dim != self.grid.dim:
            raise ValueError(f"operator is {self.operator.dim}-D but the grid is {self.grid.dim}-D")
        if len(self.boundary.conormal) != self.grid.dim:
            raise ValueError(f"conormal needs {self.grid.dim} components")
        if self.s < 1:
            raise ValueError("at least one unknown coefficient or source amplitude is required")
        if len(self.measurement.weights) != self.s:
            raise ValueError(
                f"{len(self.measurement.weights)} measurement weights for {self.s} unknowns"
            )
        if self.truth and len(self.truth) != self.s:
            raise ValueError(f"truth has {len(self.truth)} components, expected {self.s}")
        if float(self.theta) not in SUPPORTED_THETAS:
            raise ValueError(f"theta must be one of {SUPPORTED_THETAS}, got {self.theta}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "samples", sample_problem(self))

    @property
    def r(self) -> int:
        return self.operator.r

    @property
    def s(self) -> int:
        return self.operator.r + len(self.source_modes)

    def with_discretization(self, grid=None, time_grid=None, theta=None) -> "ProblemSpec":
        return dataclasses.replace(
            self,
            grid=self.grid if grid is None else grid,
            time_grid=self.time_grid if time_grid is None else time_grid,
            theta=self.theta if theta is None else theta,
        )

    def with_measurement(self, measurement: MeasurementSpec) -> "ProblemSpec":
        return dataclasses.replace(self, measurement=measurement)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "r": self.r,
            "s": self.s,
            "theta": self.theta,
            "grid": self.grid.describe(),
            "time": self.time_grid.describe(),
        }


def _frozen_copy(values):
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class StateField:
    """Node values u(t_n, node) for levels start_level .. start_level + len(values) - 1."""

    values: np.ndarray
    grid: SpatialGrid
    times: np.ndarray
    start_level: int = 0

    def __post_init__(self):
        values = _frozen_copy(self.values)
        if values.ndim != 2 or values.shape[1] != self.grid.n_nodes:
            raise ValueError(f"state values must have shape (levels, {self.grid.n_nodes})")
        if values.shape[0] != len(self.times):
            raise ValueError("state values and times disagree on the number of levels")
        if not np.all(np.isfinite(values)):
            raise ValueError("state values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", _frozen_copy(self.times))

    @property
    def stop_level(self) -> int:
        return self.start_level + self.values.shape[0] - 1

    @property
    def levels(self) -> range:
        return range(self.start_level, self.stop_level + 1)

    def at(self, level: int) -> np.ndarray:
        if level not in self.levels:
            raise IndexError(f"level {level} outside [{self.start_level}, {self.stop_level}]")
        return self.values[level - self.start_level]


@dataclass(frozen=True, eq=False)
class QTrajectory:
    """Sampled unknowns q_i(t_n); ``values`` has shape (s, levels)."""

    values: np.ndarray
    times: np.ndarray
    start_level: int = 0

    def __post_init__(self):
        values = _frozen_copy(self.values)
        if values.ndim != 2 or values.shape[1] != len(self.times):
            raise ValueError("trajectory values must have shape (s, levels)")
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", _frozen_copy(self.times))

    @classmethod
    def zeros(cls, s: int, time_grid: TimeGrid, start_level=0, stop_level=None) -> "QTrajectory":
        stop_level = time_grid.n_steps if stop_level is None else stop_level
        times = time_grid.times[start_level : stop_level + 1]
        return cls(np.zeros((s, times.size)), times, start_level)

    @classmethod
    def from_fields(cls, fields, time_grid: TimeGrid) -> "QTrajectory":
        values = np.stack([sample_series(f, time_grid) for f in fields])
        return cls(values, time_grid.times, 0)

    @property
    def s(self) -> int:
        return self.values.shape[0]

    @property
    def stop_level(self) -> int:
        return self.start_level + self.values.shape[1] - 1

    @property
    def levels(self) -> range:
        return range(self.start_level, self.stop_level + 1)

    def at(self, level: int) -> np.ndarray:
        if level not in self.levels:
            raise IndexError(f"level {level} outside [{self.start_level}, {self.stop_level}]")
        return self.values[:, level - self.start_level]

    def window(self, start_level: int, stop_level: int) -> "QTrajectory":
        lo, hi = start_level - self.start_level, stop_level - self.start_level + 1
        if lo < 0 or hi > self.values.shape[1]:
            raise IndexError(f"levels [{start_level}, {stop_level}] not covered")
        return QTrajectory(self.values[:, lo:hi], self.times[lo:hi], start_level)
