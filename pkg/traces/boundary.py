"""Boundary traces of state fields and operator images, and pairings with weights."""

from __future__ import annotations

import numpy as np

from discretization.grid import GridError, SpatialGrid
from discretization.stencils import FIRST_KEYS, SECOND_KEYS, difference_operators
from problems.model import ProblemSpec, StateField


def _rows(field: StateField, level):
    if level is None:
        return field.values, np.arange(field.start_level, field.stop_level + 1)
    return field.at(level)[None, :], np.array([level])


def _derivative_traces(values: np.ndarray, grid: SpatialGrid, second: bool) -> dict:
    ops = difference_operators(grid)
    if second and not ops.second_order_traces:
        raise GridError(f"grid too small for second-derivative trace stencils: {grid.counts}")
    keys = list(FIRST_KEYS[: grid.dim])
    if second:
        for k in range(grid.dim):
            for l in range(k, grid.dim):
                keys.append(SECOND_KEYS[(k, l)])
    return {key: (ops.boundary[key] @ values.T).T for key in keys}


def trace_value(field: StateField, level: int) -> np.ndarray:
    return field.at(level)[field.grid.boundary_index].copy()


def trace_derivatives(field: StateField, level: int) -> dict:
    """First and second partials at boundary nodes, keyed "x", "y", "xx", "yy", "xy"."""
    values, _ = _rows(field, level)
    return {key: trace[0] for key, trace in _derivative_traces(values, field.grid, True).items()}


def operator_traces(problem: ProblemSpec, index: int, field: StateField, level=None) -> np.ndarray:
    """
    Boundary values of A_index u with A_0 the principal operator and A_i (i >= 1)
    the first-order modes. Returns (levels, boundary nodes) over every level of
    ``field`` or a single row when ``level`` is given.
    """
    grid = problem.grid
    samples = problem.samples
    bidx = grid.boundary_index
    values, levels = _rows(field, level)
    derivs = _derivative_traces(values, grid, second=index == 0)
    base = values[:, bidx]
    if index == 0:
        result = samples.reaction[levels][:, bidx] * base
        for k in range(grid.dim):
            result += samples.drift[levels, k][:, bidx] * derivs[FIRST_KEYS[k]]
            for l in range(grid.dim):
                result -= samples.diffusion[levels, k, l][:, bidx] * derivs[SECOND_KEYS[(k, l)]]
        return result
    if not 1 <= index <= problem.r:
        raise IndexError(f"operator index {index} outside 0..{problem.r}")
    i = index - 1
    result = samples.mode_reaction[i, levels][:, bidx] * base
    for k in range(grid.dim):
        result += samples.mode_drift[i, levels, k][:, bidx] * derivs[FIRST_KEYS[k]]
    return result


def operator_trace(problem: ProblemSpec, index: int, field: StateField, level: int) -> np.ndarray:
    return operator_traces(problem, index, field, level)[0]


def combined_operator_traces(problem: ProblemSpec, q_values: np.ndarray, field: StateField):
    """Boundary values of A(q)u = A_0 u + sum_{i<=r} q_i A_i u for every level of ``field``."""
    result = operator_traces(problem, 0, field)
    for i in range(problem.r):
        result = result + q_values[i][:, None] * operator_traces(problem, i + 1, field)
    return result


def pair_with_weights(trace, weights, grid: SpatialGrid):
    """
    Boundary quadrature of ``trace`` against each weight.

    ``trace`` is (nb,) or (levels, nb); ``weights`` is (nb,) or (s, nb). The result drops
    the axes that were not supplied, so a single trace and weight give a float.
    """
    trace = np.asarray(trace, dtype=float)
    weights = np.asarray(weights, dtype=float)
    nb = grid.n_boundary
    if trace.shape[-1] != nb or weights.shape[-1] != nb:
        raise GridError(f"boundary arrays must end in {nb} nodes")
    result = trace @ (weights * grid.weights).T
    return float(result) if np.ndim(result) == 0 else result
