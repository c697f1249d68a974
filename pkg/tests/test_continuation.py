import numpy as np
import pytest

import inverse.continuation as continuation
from forward import solve_forward
from inverse import (
    ContinuationError,
    ConvergenceError,
    WindowPolicy,
    verify_solution,
    windowed_solve,
)
from problems import QTrajectory
from synth import SynthConfig, generate_measurements
from synth.scoring import score


@pytest.fixture
def synthesized(build_problem):
    def _make(name, grid, steps):
        problem = build_problem(name, grid=grid, steps=steps)
        measurement, truth = generate_measurements(problem, SynthConfig(truth=problem.truth))
        return problem.with_measurement(measurement), truth

    return _make


@pytest.mark.parametrize(
    "text, kind, count",
    [
        ("single", "single", 1),
        ("adaptive", "adaptive", 1),
        ("fixed:4", "fixed", 4),
        (" fixed:2 ", "fixed", 2),
    ],
)
def test_policy_parse(text, kind, count):
    policy = WindowPolicy.parse(text)
    assert (policy.kind, policy.count) == (kind, count)
    assert WindowPolicy.parse(policy.label()) == policy


@pytest.mark.parametrize("text", ["fixed", "fixed:", "fixed:x", "halving", ""])
def test_policy_parse_rejects_unknown_text(text):
    with pytest.raises(ValueError):
        WindowPolicy.parse(text)


def test_policy_rejects_zero_windows():
    with pytest.raises(ValueError):
        WindowPolicy.parse("fixed:0")
    with pytest.raises(ValueError):
        WindowPolicy("adaptive", max_halvings=-1)


def test_fixed_windows_share_boundary_levels(synthesized):
    problem, truth = synthesized("linear_source_1d", (41,), 200)
    result = windowed_solve(problem, "fixed:4")
    single = windowed_solve(problem, "single")
    report = result.report
    assert report["policy"] == "fixed:4"
    assert report["window_count"] == 4
    starts = [w["window"]["start_level"] for w in report["windows"]]
    stops = [w["window"]["stop_level"] for w in report["windows"]]
    assert starts[0] == 0 and stops[-1] == 200
    assert starts[1:] == stops[:-1]
    assert result.q.values.shape == (1, 201)
    assert result.u.values.shape == (201, 41)
    discretization_error = score(single.q, truth)["l2"]
    assert score(result.q, single.q)["l2"] <= 10 * discretization_error


def test_single_window_reports_verification(synthesized):
    problem, _ = synthesized("linear_source_1d", (41,), 200)
    result = windowed_solve(problem, "single")
    report = result.report
    assert report["window_count"] == 1 and report["halvings"] == 0
    assert report["min_abs_det"] == pytest.approx(3.0)
    verification = report["verification"]
    assert verification["pde_residual"] < 1e-8
    assert verification["overdetermination_residual"] < 1e-1
    for key in ("iterations_total", "max_condition", "max_fixed_point_residual"):
        assert key in report


def _fail_long_windows(limit):
    real = continuation.picard_solve

    def fake(problem, start, stop, tol, max_iter, **kwargs):
        if stop - start > limit:
            raise ConvergenceError(
                "too long",
                "divergence",
                [1.0, 2.0],
                report={"window": {"start_level": start, "stop_level": stop}},
            )
        return real(problem, start, stop, tol, max_iter, **kwargs)

    return fake


def test_adaptive_policy_halves_failing_windows(synthesized, monkeypatch):
    problem, _ = synthesized("linear_source_1d", (21,), 40)
    monkeypatch.setattr(continuation, "picard_solve", _fail_long_windows(10))
    result = windowed_solve(problem, "adaptive")
    report = result.report
    assert report["halvings"] == 2
    rejected = [w for w in report["windows"] if not w["accepted"]]
    assert [w["failure"] for w in rejected] == ["divergence", "divergence"]
    accepted = [w for w in report["windows"] if w["accepted"]]
    assert all(w["window"]["stop_level"] - w["window"]["start_level"] <= 10 for w in accepted)
    assert accepted[-1]["window"]["stop_level"] == 40
    assert result.q.values.shape == (1, 41)


def test_adaptive_policy_gives_up_after_max_halvings(synthesized, monkeypatch):
    problem, _ = synthesized("linear_source_1d", (21,), 40)
    monkeypatch.setattr(continuation, "picard_solve", _fail_long_windows(1))
    with pytest.raises(ContinuationError) as info:
        windowed_solve(problem, WindowPolicy("adaptive", max_halvings=2))
    assert isinstance(info.value.cause, ConvergenceError)
    assert info.value.q is None
    assert len(info.value.windows) == 3


def test_fixed_policy_keeps_windows_solved_before_a_failure(synthesized, monkeypatch):
    problem, _ = synthesized("linear_source_1d", (21,), 40)
    real = continuation.picard_solve

    def fail_second(problem, start, stop, tol, max_iter, **kwargs):
        if start > 0:
            raise ConvergenceError("stuck", "max_iter", [1.0])
        return real(problem, start, stop, tol, max_iter, **kwargs)

    monkeypatch.setattr(continuation, "picard_solve", fail_second)
    with pytest.raises(ContinuationError) as info:
        windowed_solve(problem, "fixed:2")
    partial = info.value.q
    assert partial.stop_level == 20
    assert np.all(np.isfinite(partial.values))
    assert info.value.windows[-1]["failure"] == "max_iter"


def test_too_many_fixed_windows(synthesized):
    problem, _ = synthesized("linear_source_1d", (21,), 10)
    with pytest.raises(ValueError):
        windowed_solve(problem, "fixed:6")


@pytest.mark.parametrize("policy", ["single", "fixed:4"])
def test_same_grid_round_trip_reproduces_data_and_truth(build_problem, policy):
    problem = build_problem("linear_source_1d", grid=(41,), steps=80)
    config = SynthConfig(truth=problem.truth, inverse_crime=True)
    measurement, truth = generate_measurements(problem, config)
    problem = problem.with_measurement(measurement)
    result = windowed_solve(problem, policy)
    assert result.report["verification"]["overdetermination_residual"] <= 1e-8
    assert score(result.q, truth)["l2"] <= 1e-6


def test_adaptive_reconstruction_from_oversampled_data(build_problem):
    problem = build_problem("linear_source_1d")
    assert (problem.grid.counts, problem.time_grid.n_steps) == ((201,), 400)
    measurement, truth = generate_measurements(
        problem, SynthConfig(truth=problem.truth, oversample=2)
    )
    result = windowed_solve(problem.with_measurement(measurement), "adaptive")
    assert score(result.q, truth)["l2"] <= 1e-2
    for window in result.report["windows"]:
        assert all(ratio < 0.9 for ratio in window["contraction_ratios"])


def test_windowed_state_is_the_forward_solution_of_the_recovered_coefficients(synthesized):
    problem, _ = synthesized("nonlinear_drift_1d", (21,), 40)
    result = windowed_solve(problem, "fixed:4")
    np.testing.assert_allclose(result.u.values, solve_forward(problem, result.q).values, atol=1e-9)


def test_perturbed_coefficients_miss_the_data(synthesized):
    problem, _ = synthesized("linear_source_1d", (41,), 80)
    result = windowed_solve(problem, "single")
    recovered = result.report["verification"]
    shifted = QTrajectory(result.q.values + 1e-2, result.q.times)
    perturbed = verify_solution(solve_forward(problem, shifted), shifted, problem)
    assert perturbed["overdetermination_residual"] > recovered["overdetermination_residual"]
    assert perturbed["pde_residual"] < 1e-8
    assert recovered["boundary_defect"] is not None


def test_adaptive_policy_recovers_from_real_divergence(build_problem):
    problem = build_problem("drift_divergence_1d")
    result = windowed_solve(problem, "adaptive")
    report = result.report
    assert report["halvings"] >= 1
    assert any(w["failure"] == "divergence" for w in report["windows"] if not w["accepted"])
    assert result.q.values.shape == (2, 101)
    assert np.all(np.isfinite(result.q.values))
    assert report["windows"][-1]["window"]["stop_level"] == 100
