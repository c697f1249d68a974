import numpy as np
import pytest

from discretization import (
    GridError,
    boundary_integral,
    build_grid,
    build_time_grid,
    refine,
    refine_time,
)


def test_one_dimensional_boundary():
    grid = build_grid([2.0], [5])
    assert grid.dim == 1
    assert grid.spacings == (0.5,)
    np.testing.assert_array_equal(grid.boundary_index, [0, 4])
    np.testing.assert_array_equal(grid.normals[:, 0], [-1.0, 1.0])
    assert boundary_integral(np.array([1.0, 3.0]), np.ones(2), grid) == 4.0


def test_two_dimensional_boundary_walks_counter_clockwise_from_origin():
    grid = build_grid([1.0, 2.0], [3, 4])
    points = grid.boundary_points
    assert grid.n_boundary == 2 * (3 + 4) - 4
    np.testing.assert_array_equal(points[0], [0.0, 0.0])
    np.testing.assert_array_equal(points[1], [0.5, 0.0])
    np.testing.assert_array_equal(points[2], [1.0, 0.0])
    assert len({tuple(p) for p in points}) == grid.n_boundary
    # signed area of the boundary polygon is positive for counter-clockwise order
    x, y = points[:, 0], points[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area == pytest.approx(2.0)
    assert grid.node_index(2, 3) == 2 * 4 + 3


def test_two_dimensional_quadrature_is_exact_for_linear_functions():
    grid = build_grid([1.0, 1.0], [21, 21])
    x, y = grid.boundary_points.T
    ones = np.ones(grid.n_boundary)
    assert boundary_integral(ones, ones, grid) == pytest.approx(4.0, abs=1e-12)
    assert boundary_integral(1.0 + x + y, ones, grid) == pytest.approx(8.0, abs=1e-12)


def test_boundary_quadrature_is_second_order():
    exact = np.sin(1.0) * (1.0 + np.e) + (np.e - 1.0) * (1.0 + np.cos(1.0))
    errors = []
    for n in (11, 21, 41):
        grid = build_grid([1.0, 1.0], [n, n])
        x, y = grid.boundary_points.T
        value = boundary_integral(np.cos(x) * np.exp(y), np.ones(grid.n_boundary), grid)
        errors.append(abs(value - exact))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


def test_corner_weight_is_the_mean_of_the_adjacent_spacings():
    grid = build_grid([1.0, 2.0], [3, 4])
    hx, hy = 0.5, 2.0 / 3.0
    weights = dict(zip(grid.boundary_index.tolist(), grid.weights))
    for i, j in [(0, 0), (2, 0), (2, 3), (0, 3)]:
        assert weights[grid.node_index(i, j)] == pytest.approx(0.5 * (hx + hy))
    assert weights[grid.node_index(1, 0)] == pytest.approx(hx)
    assert weights[grid.node_index(0, 1)] == pytest.approx(hy)
    assert grid.weights.sum() == pytest.approx(6.0)


def test_corner_normals_are_diagonal():
    grid = build_grid([1.0, 1.0], [5, 5])
    corners = grid.normals[grid.corner]
    assert corners.shape == (4, 2)
    np.testing.assert_allclose(np.abs(corners), np.sqrt(0.5))
    np.testing.assert_allclose(np.linalg.norm(grid.normals, axis=1), 1.0)


@pytest.mark.parametrize("counts", [[2], [5, 2], [0]])
def test_too_few_nodes(counts):
    extents = [1.0] * len(counts)
    with pytest.raises(GridError):
        build_grid(extents, counts)


def test_refined_grid_contains_coarse_nodes_bit_identically():
    coarse = build_grid([1.0], [51])
    fine = refine(coarse, 4)
    assert fine.counts == (201,)
    np.testing.assert_array_equal(fine.axes[0][::4], coarse.axes[0])
    with pytest.raises(GridError):
        refine(coarse, 1)


def test_time_grid_levels_and_windows():
    tg = build_time_grid(1.0, 10, windows=3)
    assert tg.n_levels == 11
    assert tg.dt == pytest.approx(0.1)
    assert tg.window_levels[0] == 0 and tg.window_levels[-1] == 10
    assert len(tg.window_bounds()) == 3

    explicit = build_time_grid(1.0, 10, windows=[0, 4, 10])
    assert explicit.window_bounds() == [(0, 4), (4, 10)]
    with pytest.raises(GridError):
        build_time_grid(1.0, 10, windows=[0, 5, 5, 10])
    with pytest.raises(GridError):
        build_time_grid(0.0, 10)


def test_refined_time_grid_keeps_window_boundaries():
    tg = build_time_grid(0.5, 25, windows=[0, 10, 25])
    fine = refine_time(tg, 2)
    assert fine.n_steps == 50
    assert fine.window_levels == (0, 20, 50)
    np.testing.assert_array_equal(fine.times[::2], tg.times)
