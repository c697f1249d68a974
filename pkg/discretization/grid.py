"""Uniform tensor grids on [0, Lx] (x [0, Ly]) and uniform time grids with windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_NODES = 3


class GridError(ValueError):
    """Invalid grid construction or query."""


def _readonly(array):
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def _axis_positions(extent: float, count: int) -> np.ndarray:
    # i*L/(N-1) keeps positions shared by nested grids bit-identical
    index = np.arange(count, dtype=float)
    return (index * extent) / (count - 1)


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """
    Node k sits at (x_i, y_j) with k = i * Ny + j. Boundary nodes are listed
    counter-clockwise from the origin, each corner once.
    """

    extents: tuple[float, ...]
    counts: tuple[int, ...]
    spacings: tuple[float, ...]
    axes: tuple[np.ndarray, ...]
    coordinates: np.ndarray
    boundary_index: np.ndarray
    normals: np.ndarray
    edge_normals: np.ndarray
    corner: np.ndarray
    weights: np.ndarray
    interior_mask: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def n_nodes(self) -> int:
        return int(self.coordinates.shape[0])

    @property
    def n_boundary(self) -> int:
        return int(self.boundary_index.size)

    @property
    def boundary_points(self) -> np.ndarray:
        return self.coordinates[self.boundary_index]

    def node_index(self, i: int, j: int = 0) -> int:
        if self.dim == 1:
            return int(i)
        return int(i) * self.counts[1] + int(j)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "extents": list(self.extents),
            "nodes": list(self.counts),
            "spacings": list(self.spacings),
            "boundary_nodes": self.n_boundary,
        }


def _boundary_1d(count):
    index = np.array([0, count - 1])
    normals = np.array([[-1.0], [1.0]])
    edge_normals = np.stack([normals, normals], axis=1)
    return index, normals, edge_normals, np.zeros(2, dtype=bool), np.ones(2)


def _boundary_2d(nx, ny, hx, hy):
    bottom, right, top, left = (0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)
    walk = [(i, 0, bottom, bottom) for i in range(1, nx - 1)]
    walk = [(0, 0, left, bottom)] + walk + [(nx - 1, 0, bottom, right)]
    walk += [(nx - 1, j, right, right) for j in range(1, ny - 1)]
    walk += [(nx - 1, ny - 1, right, top)]
    walk += [(i, ny - 1, top, top) for i in range(nx - 2, 0, -1)]
    walk += [(0, ny - 1, top, left)]
    walk += [(0, j, left, left) for j in range(ny - 2, 0, -1)]

    index = np.array([i * ny + j for i, j, _, _ in walk])
    edge_normals = np.array([[first, second] for _, _, first, second in walk])
    corner = np.array([first != second for _, _, first, second in walk])
    summed = edge_normals.sum(axis=1)
    normals = summed / np.linalg.norm(summed, axis=1, keepdims=True)
    weights = np.where(
        corner,
        0.5 * (hx + hy),
        np.where(edge_normals[:, 0, 0] == 0.0, hx, hy),
    )
    return index, normals, edge_normals, corner, weights


def build_grid(extents, counts) -> SpatialGrid:
    """Uniform grid with ``counts[d]`` nodes spanning ``[0, extents[d]]``."""
    extents = tuple(float(e) for e in np.atleast_1d(extents))
    counts = tuple(int(c) for c in np.atleast_1d(counts))
    if len(extents) not in (1, 2) or len(counts) != len(extents):
        raise GridError(f"need 1 or 2 extents with matching node counts, got {extents} / {counts}")
    if any(not np.isfinite(e) or e <= 0 for e in extents):
        raise GridError(f"extents must be positive, got {extents}")
    if any(c < MIN_NODES for c in counts):
        raise GridError(f"every axis needs at least {MIN_NODES} nodes, got {counts}")

    axes = tuple(_readonly(_axis_positions(e, c)) for e, c in zip(extents, counts))
    spacings = tuple(e / (c - 1) for e, c in zip(extents, counts))
    if len(counts) == 1:
        coordinates = axes[0][:, None]
        boundary = _boundary_1d(counts[0])
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        coordinates = np.stack([gx.ravel(), gy.ravel()], axis=1)
        boundary = _boundary_2d(counts[0], counts[1], spacings[0], spacings[1])
    index, normals, edge_normals, corner, weights = boundary

    interior_mask = np.ones(coordinates.shape[0], dtype=bool)
    interior_mask[index] = False
    return SpatialGrid(
        extents=extents,
        counts=counts,
        spacings=spacings,
        axes=axes,
        coordinates=_readonly(coordinates),
        boundary_index=_readonly(index),
        normals=_readonly(normals),
        edge_normals=_readonly(edge_normals),
        corner=_readonly(corner),
        weights=_readonly(weights),
        interior_mask=_readonly(interior_mask),
    )


def boundary_integral(values, weight_values, grid: SpatialGrid) -> float:
    """Quadrature of values * weight_values over the boundary (point sum in 1-D)."""
    values = np.asarray(values, dtype=float)
    weight_values = np.asarray(weight_values, dtype=float)
    expected = (grid.n_boundary,)
    if values.shape != expected or weight_values.shape != expected:
        raise GridError(
            f"boundary arrays must have shape {expected}, "
            f"got {values.shape} and {weight_values.shape}"
        )
    return float(np.sum(values * weight_values * grid.weights))


def refine(grid: SpatialGrid, factor: int) -> SpatialGrid:
    factor = int(factor)
    if factor < 2:
        raise GridError(f"refinement factor must be >= 2, got {factor}")
    return build_grid(grid.extents, tuple((c - 1) * factor + 1 for c in grid.counts))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Levels t_n = n*T/N; ``window_levels`` are the level indices of the window boundaries."""

    horizon: float
    n_steps: int
    window_levels: tuple[int, ...]
    times: np.ndarray

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def n_levels(self) -> int:
        return self.n_steps + 1

    def window_bounds(self) -> list[tuple[int, int]]:
        return list(zip(self.window_levels[:-1], self.window_levels[1:]))

    def with_windows(self, count: int) -> "TimeGrid":
        return build_time_grid(self.horizon, self.n_steps, windows=count)

    def describe(self) -> dict:
        return {
            "horizon": self.horizon,
            "steps": self.n_steps,
            "dt": self.dt,
            "window_levels": list(self.window_levels),
        }


def build_time_grid(horizon: float, n_steps: int, windows=1) -> TimeGrid:
    """
    ``windows`` is either a window count (boundaries rounded to levels) or an
    explicit increasing sequence of boundary levels starting at 0 and ending at N.
    """
    horizon = float(horizon)
    n_steps = int(n_steps)
    if not np.isfinite(horizon) or horizon <= 0:
        raise GridError(f"horizon must be positive, got {horizon}")
    if n_steps < 1:
        raise GridError(f"need at least one time step, got {n_steps}")

    if np.isscalar(windows):
        count = int(windows)
        if count < 1 or count > n_steps:
            raise GridError(f"window count must lie in [1, {n_steps}], got {count}")
        levels = tuple(int(round(k * n_steps / count)) for k in range(count + 1))
    else:
        levels = tuple(int(level) for level in windows)
    if levels[0] != 0 or levels[-1] != n_steps or any(b <= a for a, b in zip(levels, levels[1:])):
        raise GridError(f"window boundaries must increase from 0 to {n_steps}, got {levels}")

    times = (np.arange(n_steps + 1, dtype=float) * horizon) / n_steps
    return TimeGrid(horizon=horizon, n_steps=n_steps, window_levels=levels, times=_readonly(times))


def refine_time(time_grid: TimeGrid, factor: int) -> TimeGrid:
    factor = int(factor)
    if factor < 2:
        raise GridError(f"refinement factor must be >= 2, got {factor}")
    levels = tuple(level * factor for level in time_grid.window_levels)
    return build_time_grid(time_grid.horizon, time_grid.n_steps * factor, windows=levels)
