from discretization.grid import (
    GridError,
    SpatialGrid,
    TimeGrid,
    boundary_integral,
    build_grid,
    build_time_grid,
    refine,
    refine_time,
)
from discretization.stencils import DifferenceOperators, difference_operators

__all__ = [
    "DifferenceOperators",
    "GridError",
    "SpatialGrid",
    "TimeGrid",
    "boundary_integral",
    "build_grid",
    "build_time_grid",
    "difference_operators",
    "refine",
    "refine_time",
]
