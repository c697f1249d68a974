"""
Sparse finite-difference operators on a SpatialGrid.

Interior rows are centered. End rows use one-sided second-order stencils
(3 points for first derivatives, 4 points for second derivatives), so a
boundary row of ``dx`` is exact on quadratics and a boundary row of ``dxx``
is exact on cubics. Two-dimensional operators are Kronecker products of the
one-dimensional ones; at a corner both axes are one-sided, which equals
averaging the two edge-wise one-sided views.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from discretization.grid import GridError, SpatialGrid


def first_derivative_matrix(count: int, spacing: float) -> sp.csr_matrix:
    if count < 3:
        raise GridError("first-derivative stencil needs at least 3 nodes")
    h = float(spacing)
    matrix = sp.lil_matrix((count, count))
    for i in range(1, count - 1):
        matrix[i, i - 1] = -0.5 / h
        matrix[i, i + 1] = 0.5 / h
    matrix[0, 0:3] = np.array([-3.0, 4.0, -1.0]) / (2.0 * h)
    matrix[count - 1, count - 3 :] = np.array([1.0, -4.0, 3.0]) / (2.0 * h)
    return matrix.tocsr()


def second_derivative_matrix(count: int, spacing: float) -> sp.csr_matrix:
    """End rows are left empty when fewer than 4 nodes are available."""
    if count < 3:
        raise GridError("second-derivative stencil needs at least 3 nodes")
    h2 = float(spacing) ** 2
    matrix = sp.lil_matrix((count, count))
    for i in range(1, count - 1):
        matrix[i, i - 1 : i + 2] = np.array([1.0, -2.0, 1.0]) / h2
    if count >= 4:
        matrix[0, 0:4] = np.array([2.0, -5.0, 4.0, -1.0]) / h2
        matrix[count - 1, count - 4 :] = np.array([-1.0, 4.0, -5.0, 2.0]) / h2
    return matrix.tocsr()


@dataclass(frozen=True, eq=False)
class DifferenceOperators:
    """Full-grid derivative matrices; ``y`` entries are None in 1-D."""

    dx: sp.csr_matrix
    dxx: sp.csr_matrix
    dy: sp.csr_matrix | None
    dyy: sp.csr_matrix | None
    dxy: sp.csr_matrix | None
    boundary: dict
    second_order_traces: bool

    def first(self, k: int) -> sp.csr_matrix:
        return self.dx if k == 0 else self.dy

    def second(self, k: int, l: int) -> sp.csr_matrix:
        if k == l:
            return self.dxx if k == 0 else self.dyy
        return self.dxy


@lru_cache(maxsize=32)
def difference_operators(grid: SpatialGrid) -> DifferenceOperators:
    """Derivative matrices of ``grid``, cached per grid instance."""
    if grid.dim == 1:
        (n,), (h,) = grid.counts, grid.spacings
        dx = first_derivative_matrix(n, h)
        dxx = second_derivative_matrix(n, h)
        dy = dyy = dxy = None
    else:
        (nx, ny), (hx, hy) = grid.counts, grid.spacings
        d1x, d1y = first_derivative_matrix(nx, hx), first_derivative_matrix(ny, hy)
        d2x, d2y = second_derivative_matrix(nx, hx), second_derivative_matrix(ny, hy)
        ix, iy = sp.identity(nx, format="csr"), sp.identity(ny, format="csr")
        dx = sp.kron(d1x, iy, format="csr")
        dy = sp.kron(ix, d1y, format="csr")
        dxx = sp.kron(d2x, iy, format="csr")
        dyy = sp.kron(ix, d2y, format="csr")
        dxy = sp.kron(d1x, d1y, format="csr")

    rows = grid.boundary_index
    boundary = {"x": dx[rows], "xx": dxx[rows]}
    if grid.dim == 2:
        boundary.update({"y": dy[rows], "yy": dyy[rows], "xy": dxy[rows]})
    return DifferenceOperators(
        dx=dx,
        dxx=dxx,
        dy=dy,
        dyy=dyy,
        dxy=dxy,
        boundary=boundary,
        second_order_traces=min(grid.counts) >= 4,
    )


FIRST_KEYS = ("x", "y")
SECOND_KEYS = {(0, 0): "xx", (1, 1): "yy", (0, 1): "xy", (1, 0): "xy"}
