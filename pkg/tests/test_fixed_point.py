import numpy as np
import pytest

import inverse.fixed_point as fixed_point
from forward import solve_auxiliary_phi
from inverse import (
    ConvergenceError,
    build_B0,
    evaluate_R,
    picard_solve,
    psi_tilde_derivative,
    window_norm,
)
from problems import QTrajectory
from synth import SynthConfig, generate_measurements
from synth.scoring import score


def _synthesized(problem, oversample=2, inverse_crime=False):
    measurement, truth = generate_measurements(
        problem,
        SynthConfig(truth=problem.truth, oversample=oversample, inverse_crime=inverse_crime),
    )
    return problem.with_measurement(measurement), truth


def test_window_norm_sums_component_norms():
    times = np.linspace(0.0, 1.0, 101)
    values = np.vstack([np.ones_like(times), 2.0 * np.ones_like(times)])
    assert window_norm(values, times, 2) == pytest.approx(3.0)
    assert window_norm(values, times, 4) == pytest.approx(3.0)
    assert window_norm(values[:1] * 0.0, times) == 0.0


def test_centered_derivative_is_exact_on_quadratic_series(linear_problem, monkeypatch):
    phi = solve_auxiliary_phi(linear_problem)
    times = phi.times
    monkeypatch.setattr(fixed_point, "psi_tilde", lambda problem, phi: (times**2)[None, :])
    derivative = psi_tilde_derivative(linear_problem, phi, stencil="centered")
    np.testing.assert_allclose(derivative[0], 2.0 * times, atol=1e-9)


def test_level_differences_are_exact_on_linear_series(linear_problem, monkeypatch):
    phi = solve_auxiliary_phi(linear_problem)
    times = phi.times
    monkeypatch.setattr(fixed_point, "psi_tilde", lambda problem, phi: (1.0 + 3.0 * times)[None, :])
    np.testing.assert_allclose(psi_tilde_derivative(linear_problem, phi)[0], 3.0, atol=1e-9)


def test_centered_derivative_is_second_order_on_a_sine(build_problem, monkeypatch):
    monkeypatch.setattr(fixed_point, "psi_tilde", lambda problem, phi: np.sin(phi.times)[None, :])
    errors = []
    for steps in (25, 50, 100):
        problem = build_problem("linear_source_1d", grid=(11,), steps=steps)
        phi = solve_auxiliary_phi(problem)
        derivative = psi_tilde_derivative(problem, phi, stencil="centered")
        errors.append(np.max(np.abs(derivative[0] - np.cos(phi.times))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


def test_unknown_stencil_is_rejected(linear_problem):
    with pytest.raises(ValueError):
        psi_tilde_derivative(linear_problem, solve_auxiliary_phi(linear_problem), stencil="forward")


def test_psi_tilde_derivative_rejects_even_smoothing(linear_problem):
    with pytest.raises(ValueError):
        psi_tilde_derivative(linear_problem, solve_auxiliary_phi(linear_problem), 2)


def test_zero_coefficients_are_recovered_immediately(payload, build_problem):
    data = payload("linear_source_1d")
    data["truth"] = ["0"]
    problem, _ = _synthesized(build_problem(data, grid=(41,), steps=40), inverse_crime=True)
    result = picard_solve(problem)
    assert result.report["converged"]
    assert result.report["iterations"] <= 2
    assert np.max(np.abs(result.q.values)) <= 1e-6


def test_linear_source_reconstruction(build_problem):
    problem, truth = _synthesized(build_problem("linear_source_1d", grid=(101,), steps=200))
    result = picard_solve(problem)
    report = result.report
    assert report["converged"]
    assert score(result.q, truth)["l2"] <= 1e-2
    assert report["fixed_point_residual"] <= 2 * report["tol"]
    assert report["b0"]["min_abs_det"] == pytest.approx(3.0)


def test_nonlinear_drift_and_source_reconstruction(build_problem):
    problem, truth = _synthesized(build_problem("nonlinear_drift_1d", grid=(41,), steps=50))
    result = picard_solve(problem, tol=1e-8)
    assert result.report["converged"]
    errors = score(result.q, truth)
    assert errors["l2"] <= 5e-2
    assert result.report["fixed_point_residual"] <= 2e-8
    ratios = result.report["contraction_ratios"]
    assert len(ratios) >= 2
    assert max(ratios[1:]) < 0.9
    # R(q_rec) reproduces q_rec
    again = evaluate_R(result.q, problem, result.phi, result.b0)
    assert window_norm(again.values - result.q.values, result.q.times) <= 2e-8


def test_reduced_solution_is_returned_with_the_fixed_point(build_problem):
    problem, _ = _synthesized(build_problem("linear_source_1d", grid=(21,), steps=40))
    result = picard_solve(problem)
    assert result.v.values.shape == result.phi.values.shape
    assert np.all(result.v.values[0] == 0.0)


def test_window_subrange(build_problem):
    problem, _ = _synthesized(build_problem("linear_source_1d", grid=(21,), steps=40))
    result = picard_solve(problem, 10, 30)
    assert result.q.start_level == 10 and result.q.stop_level == 30
    assert result.report["window"]["start_level"] == 10
    assert result.report["window"]["t_end"] == pytest.approx(0.75)


def test_divergence_is_detected_after_consecutive_growth(linear_problem, monkeypatch):
    def growing(q, setup):
        return QTrajectory(2.0 * q.values + 1.0, q.times, q.start_level), None

    monkeypatch.setattr(fixed_point, "fixed_point_step", growing)
    with pytest.raises(ConvergenceError) as info:
        picard_solve(linear_problem, max_iter=20)
    assert info.value.kind == "divergence"
    assert len(info.value.increments) == 4
    assert info.value.report["converged"] is False


def test_iteration_budget_is_enforced(linear_problem, monkeypatch):
    def slow(q, setup):
        return QTrajectory(0.5 * q.values + 1.0, q.times, q.start_level), None

    monkeypatch.setattr(fixed_point, "fixed_point_step", slow)
    with pytest.raises(ConvergenceError) as info:
        picard_solve(linear_problem, max_iter=3)
    assert info.value.kind == "max_iter"
    assert len(info.value.increments) == 3


@pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"max_iter": 0}, {"norm_p": 3}])
def test_invalid_iteration_settings(linear_problem, kwargs):
    with pytest.raises(ValueError):
        picard_solve(linear_problem, **kwargs)


def test_b0_passed_to_evaluate_R_matches_build(linear_problem):
    phi = solve_auxiliary_phi(linear_problem)
    b0 = build_B0(phi, linear_problem)
    zero = QTrajectory.zeros(1, linear_problem.time_grid)
    first = evaluate_R(zero, linear_problem, phi, b0)
    assert first.values.shape == zero.values.shape
    assert np.all(np.isfinite(first.values))


@pytest.mark.parametrize(
    "name, grid, steps", [("linear_source_1d", (41,), 80), ("nonlinear_drift_1d", (41,), 50)]
)
def test_same_grid_data_is_recovered_to_the_iteration_tolerance(build_problem, name, grid, steps):
    problem, truth = _synthesized(build_problem(name, grid=grid, steps=steps), inverse_crime=True)
    result = picard_solve(problem, tol=1e-9, max_iter=100)
    assert score(result.q, truth)["l2"] <= 1e-6


def test_crank_nicolson_round_trip_with_the_first_level_given(build_problem):
    problem, truth = _synthesized(
        build_problem("linear_source_1d", grid=(41,), steps=80, theta=0.5), inverse_crime=True
    )
    result = picard_solve(problem, tol=1e-9, max_iter=100, q_start=truth.values[:, 0])
    assert result.q.values[0, 0] == truth.values[0, 0]
    assert score(result.q, truth)["l2"] <= 1e-6


def test_linear_map_is_affine(linear_problem):
    phi = solve_auxiliary_phi(linear_problem)
    b0 = build_B0(phi, linear_problem)
    times = linear_problem.time_grid.times
    first = QTrajectory(np.sin(3.0 * times)[None, :], times)
    second = QTrajectory((1.0 + times**2)[None, :], times)
    both = QTrajectory(first.values + second.values, times)
    scaled = QTrajectory(2.5 * first.values, times)
    zero = QTrajectory.zeros(1, linear_problem.time_grid)
    base = evaluate_R(zero, linear_problem, phi, b0).values

    def shifted(q):
        return evaluate_R(q, linear_problem, phi, b0).values - base

    np.testing.assert_allclose(shifted(scaled), 2.5 * shifted(first), atol=1e-9)
    np.testing.assert_allclose(shifted(both), shifted(first) + shifted(second), atol=1e-9)


def test_first_level_can_be_pinned(linear_problem):
    phi = solve_auxiliary_phi(linear_problem)
    b0 = build_B0(phi, linear_problem)
    zero = QTrajectory.zeros(1, linear_problem.time_grid)
    free = evaluate_R(zero, linear_problem, phi, b0)
    pinned = evaluate_R(zero, linear_problem, phi, b0, q_start=[0.7])
    assert pinned.values[0, 0] == 0.7
    np.testing.assert_array_equal(pinned.values[:, 1:], free.values[:, 1:])
    with pytest.raises(ValueError):
        evaluate_R(zero, linear_problem, phi, b0, q_start=[1.0, 2.0])


def test_long_window_diverges(build_problem):
    problem = build_problem("drift_divergence_1d")
    with pytest.raises(ConvergenceError) as info:
        picard_solve(problem)
    assert info.value.kind == "divergence"
    assert info.value.report["converged"] is False
