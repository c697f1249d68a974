import numpy as np
import pytest

from forward import solve_forward
from inverse import check_compatibility
from problems import QTrajectory
from synth import SynthConfig, add_noise, generate_measurements, noiseless_measurements, score
from traces import pair_with_weights


def test_zero_noise_returns_the_series_unchanged():
    psi = np.array([[3.0, 2.5, 2.0]])
    np.testing.assert_array_equal(add_noise(psi, 0.0, 7), psi)


def test_noise_is_reproducible_and_spares_the_initial_level():
    psi = np.ones((2, 20001))
    first = add_noise(psi, 1e-2, 11)
    np.testing.assert_array_equal(first, add_noise(psi, 1e-2, 11))
    assert not np.array_equal(first, add_noise(psi, 1e-2, 12))
    np.testing.assert_array_equal(first[:, 0], 1.0)
    relative = first[:, 1:] - 1.0
    assert np.std(relative) == pytest.approx(1e-2, rel=0.05)
    assert abs(np.mean(relative)) < 1e-3


def test_negative_noise_level_is_rejected():
    with pytest.raises(ValueError):
        add_noise(np.ones((1, 3)), -0.1, 0)


def test_synth_config_validation(linear_problem):
    truth = linear_problem.truth
    with pytest.raises(ValueError):
        SynthConfig(truth=())
    with pytest.raises(ValueError):
        SynthConfig(truth=truth, oversample=0)
    with pytest.raises(ValueError):
        SynthConfig(truth=truth, seed=-1)
    assert SynthConfig(truth=truth, oversample=4, inverse_crime=True).factor == 1


def _trajectory(values):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return QTrajectory(values, np.linspace(0.0, 1.0, values.shape[1]))


def test_score_of_exact_recovery_is_zero():
    q = _trajectory([np.linspace(1.0, 2.0, 11)])
    result = score(q, q)
    assert result["l2"] == 0.0 and result["linf"] == 0.0
    assert result["absolute"] is False


def test_score_is_relative():
    base = np.linspace(1.0, 2.0, 11)
    result = score(_trajectory([1.1 * base]), _trajectory([base]))
    assert result["l2"] == pytest.approx(0.1)
    assert result["linf"] == pytest.approx(0.1)
    assert result["components"][0]["l2"] == pytest.approx(0.1)


def test_score_falls_back_to_absolute_for_zero_truth():
    result = score(_trajectory([np.full(11, 0.5)]), _trajectory([np.zeros(11)]))
    assert result["absolute"] is True
    assert result["l2"] == pytest.approx(0.5)
    assert result["components"][0]["absolute"] is True


def test_score_requires_matching_grids():
    with pytest.raises(ValueError):
        score(_trajectory([np.ones(11)]), _trajectory([np.ones(6)]))


def test_generated_measurements_are_compatible(build_problem):
    problem = build_problem("linear_source_1d", grid=(21,), steps=20)
    measurement, truth = generate_measurements(problem, SynthConfig(truth=problem.truth))
    synthesized = problem.with_measurement(measurement)
    assert check_compatibility(synthesized) == []
    assert synthesized.samples.measured.shape == (1, 21)
    assert synthesized.samples.measured[0, 0] == pytest.approx(3.0)
    assert truth.values.shape == (1, 21)


def test_inverse_crime_data_is_the_pairing_on_the_inversion_grid(build_problem):
    problem = build_problem("nonlinear_drift_1d", grid=(21,), steps=10)
    config = SynthConfig(truth=problem.truth, inverse_crime=True)
    psi, truth = noiseless_measurements(problem, config)
    u = solve_forward(problem, truth)
    grid = problem.grid
    expected = pair_with_weights(u.values[:, grid.boundary_index], problem.samples.weights, grid).T
    np.testing.assert_allclose(psi, expected, atol=1e-12)


def test_oversampled_data_lands_on_the_inversion_levels(build_problem):
    problem = build_problem("linear_source_1d", grid=(21,), steps=20)
    psi, _ = noiseless_measurements(problem, SynthConfig(truth=problem.truth, oversample=2))
    exact = 3.0 * np.exp(-problem.time_grid.times)
    assert psi.shape == (1, 21)
    np.testing.assert_allclose(psi[0], exact, atol=2e-2)


def test_oversampled_data_differs_from_same_grid_data_at_second_order(build_problem):
    gaps = []
    for n in (11, 21, 41):
        problem = build_problem("mms_forward_1d", grid=(n,), steps=n - 1)
        same, _ = noiseless_measurements(
            problem, SynthConfig(truth=problem.truth, inverse_crime=True)
        )
        fine, _ = noiseless_measurements(problem, SynthConfig(truth=problem.truth, oversample=2))
        gaps.append(np.max(np.abs(fine - same)))
    assert gaps[0] > gaps[1] > gaps[2] > 0.0
    assert np.log2(gaps[1] / gaps[2]) >= 1.8
