import logging

import numpy as np
import pytest

from forward import solve_auxiliary_phi
from inverse import DegenerateSystemError, build_B0, build_B0_initial, check_compatibility
from problems.validation import audit_problem


def test_linear_source_matrix_is_the_weighted_mode_integral(linear_problem):
    phi = solve_auxiliary_phi(linear_problem)
    b0 = build_B0(phi, linear_problem)
    assert b0.matrices.shape == (linear_problem.time_grid.n_levels, 1, 1)
    # <1 + x, 1> over the two end points
    np.testing.assert_allclose(b0.matrices[:, 0, 0], 3.0)
    assert b0.min_abs_det == pytest.approx(3.0)
    assert b0.summary()["max_condition"] == pytest.approx(1.0)


def test_mixed_matrix_has_operator_and_source_columns(build_problem):
    problem = build_problem("nonlinear_drift_1d", grid=(41,), steps=20)
    b0 = build_B0(solve_auxiliary_phi(problem), problem)
    assert b0.matrices.shape == (21, 2, 2)
    np.testing.assert_allclose(b0.matrices[:, 0, 1], 2.0)
    np.testing.assert_allclose(b0.matrices[:, 1, 1], 1.0)
    assert np.all(np.abs(b0.determinants) > b0.det_floor)


def test_cancelling_source_mode_is_rejected_with_its_level(build_problem):
    problem = build_problem("degenerate_source_1d")
    with pytest.raises(DegenerateSystemError) as info:
        build_B0(solve_auxiliary_phi(problem), problem)
    assert info.value.level == 0
    assert "det_floor" in str(info.value)


def test_initial_precheck_warns_on_a_vanishing_operator_column(build_problem, caplog):
    problem = build_problem("zero_column_1d")
    with caplog.at_level(logging.WARNING):
        report = build_B0_initial(problem)
    assert report["singular"]
    assert report["min_abs_det"] <= report["det_floor"]
    assert "B-initial pre-check" in caplog.text


def test_initial_precheck_passes_for_a_regular_problem(linear_problem):
    report = build_B0_initial(linear_problem)
    assert not report["singular"]
    np.testing.assert_allclose(report["determinants"], 3.0)


def test_compatible_fixture_has_no_violations(linear_problem):
    assert check_compatibility(linear_problem) == []


@pytest.mark.parametrize("offset, expected", [(1e-5, 1), (1e-7, 0)])
def test_measurement_compatibility_tolerance(payload, build_problem, offset, expected):
    data = payload("linear_source_1d")
    data["measurement"]["data"] = [f"3*exp(-t) + {offset!r}"]
    problem = build_problem(data, grid=(21,), steps=10)
    violations = check_compatibility(problem)
    assert len(violations) == expected
    if expected:
        assert violations[0]["condition"] == "measurement_compatibility"
        assert violations[0]["index"] == 1
        assert violations[0]["magnitude"] == pytest.approx(offset, rel=1e-6)


def test_boundary_compatibility_violation_names_the_node(payload, build_problem):
    data = payload("linear_source_1d")
    data["boundary"]["data"] = "2*x*exp(-t) + 0.5"
    problem = build_problem(data, grid=(21,), steps=10)
    violations = [
        v
        for v in check_compatibility(problem)
        if v["condition"] == "initial_boundary_compatibility"
    ]
    assert [v["node"] for v in violations] == [0, 20]


def test_audit_of_valid_fixture_passes(linear_problem):
    audit = audit_problem(linear_problem)
    for key in ("ellipticity", "non_tangency", "symmetry", "boundary_compatibility"):
        assert audit[key]["status"] == "pass", key
    assert audit["measurement_compatibility"]["status"] == "pass"
    assert audit["b_initial"]["status"] == "pass"
    assert audit["ellipticity"]["delta0"] == pytest.approx(1.0)
    assert audit["violations"] == [] and audit["warnings"] == []


def test_audit_flags_tangential_conormal(build_problem):
    audit = audit_problem(build_problem("tangential_conormal_2d"))
    assert audit["non_tangency"]["status"] == "fail"
    assert audit["non_tangency"]["epsilon0"] == 0.0
    assert any(v["condition"] == "non_tangency" for v in audit["violations"])


def test_audit_flags_negative_diffusion(build_problem):
    audit = audit_problem(build_problem("negative_diffusion_1d"))
    assert audit["ellipticity"]["status"] == "fail"
    assert audit["ellipticity"]["delta0"] == pytest.approx(-1.0)


def test_audit_surfaces_initial_precheck_as_warning(build_problem):
    audit = audit_problem(build_problem("zero_column_1d"))
    assert audit["b_initial"]["status"] == "warn"
    assert audit["violations"] == []
    assert [w["condition"] for w in audit["warnings"]] == ["b_initial"]


def test_two_dimensional_fixture_passes_every_check(build_problem):
    problem = build_problem("linear_source_2d", grid=(11, 11), steps=10)
    audit = audit_problem(problem)
    assert audit["violations"] == []
    assert audit["non_tangency"]["epsilon0"] == pytest.approx(0.5)
    b0 = build_B0(solve_auxiliary_phi(problem), problem)
    np.testing.assert_allclose(b0.matrices[:, 0, 0], 6.0, atol=1e-12)
