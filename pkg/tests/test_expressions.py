import numpy as np
import pytest

from discretization.grid import build_grid, build_time_grid
from expressions import (
    EvaluationError,
    ExpressionSyntaxError,
    FieldCoverageError,
    FieldSpec,
    evaluate,
    parse,
    sample_field,
    sample_series,
    to_text,
)
from expressions.parser import FUNCTIONS, VARIABLES, Binary, Call, Constant, Number, Unary, Variable


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1+2*3", 7.0),
        ("(1+2)*3", 9.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("8/4/2", 1.0),
        ("sin(pi/2) + cos(0)", 2.0),
        ("sqrt(16) - abs(-3)", 1.0),
        ("1.5e2 + .5", 150.5),
    ],
)
def test_precedence_and_functions(text, expected):
    assert evaluate(parse(text)) == pytest.approx(expected, abs=1e-14)


def test_evaluate_broadcasts_and_returns_float_for_scalars():
    expr = parse("x^2 + t*y")
    value = evaluate(expr, t=2.0, x=3.0, y=1.0)
    assert isinstance(value, float)
    assert value == 11.0

    grid = evaluate(expr, t=np.array([[0.0], [1.0]]), x=np.array([[1.0, 2.0]]), y=1.0)
    np.testing.assert_allclose(grid, [[1.0, 4.0], [2.0, 5.0]])


def test_variables_are_collected():
    assert parse("exp(-t)*(1+x^2) + pi").variables() == frozenset({"t", "x"})


def test_to_text_reparses_to_the_same_values():
    for text in ["-exp(-t)*(3+x^2) - (1+sin(2*t))*(1+x)", "2^-1", "-(-0.25)", "x/3 - y"]:
        expr = parse(text)
        again = parse(to_text(expr))
        t, x, y = 0.3, 0.7, 0.11
        assert evaluate(again, t=t, x=x, y=y) == evaluate(expr, t=t, x=x, y=y)
        assert to_text(again) == to_text(expr)


def _random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        kind = rng.integers(3)
        if kind == 0:
            return Number(float(rng.uniform(-10.0, 10.0)))
        if kind == 1:
            return Constant("pi")
        return Variable(str(rng.choice(VARIABLES)))
    kind = rng.integers(3)
    if kind == 0:
        return Unary(str(rng.choice(["-", "+"])), _random_tree(rng, depth - 1))
    if kind == 1:
        return Call(str(rng.choice(sorted(FUNCTIONS))), _random_tree(rng, depth - 1))
    op = str(rng.choice(["+", "-", "*", "/", "^"]))
    return Binary(op, _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))


def _values_or_error(expr, points):
    try:
        return evaluate(expr, **points)
    except EvaluationError:
        return None


def test_random_trees_survive_printing_and_parsing():
    rng = np.random.default_rng(11)
    points = {name: rng.uniform(-2.0, 2.0, size=20) for name in VARIABLES}
    for _ in range(1000):
        expr = _random_tree(rng, 6)
        expected = _values_or_error(expr, points)
        actual = _values_or_error(parse(to_text(expr)), points)
        if expected is None:
            assert actual is None, to_text(expr)
        else:
            assert np.array_equal(actual, expected), to_text(expr)


@pytest.mark.parametrize(
    "text, fragment, offset",
    [
        ("1+*2", "missing operand before '*'", 2),
        ("(1+2", "unbalanced '('", 4),
        ("1+2)", "unbalanced ')'", 3),
        ("foo(1)", "unknown identifier 'foo'", 0),
        ("2*", "missing operand", 2),
        ("3 $ 4", "unexpected character", 2),
    ],
)
def test_syntax_errors_carry_offsets(text, fragment, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(text)
    assert fragment in str(info.value)
    assert info.value.offset == offset


def test_empty_expression_is_rejected():
    with pytest.raises(ExpressionSyntaxError):
        parse("   ")


@pytest.mark.parametrize("text", ["1/0", "sqrt(-1)", "1/(x-1)"])
def test_evaluation_errors(text):
    with pytest.raises(EvaluationError):
        evaluate(parse(text), x=1.0)


def test_missing_variable_is_an_evaluation_error():
    with pytest.raises(EvaluationError):
        evaluate(parse("t + x"), t=1.0)


def test_sample_field_on_levels_and_nodes():
    grid = build_grid([1.0], [5])
    tg = build_time_grid(1.0, 4)
    values = sample_field(FieldSpec.from_text("t + x"), grid, tg)
    assert values.shape == (5, 5)
    np.testing.assert_allclose(values[2], 0.5 + np.linspace(0.0, 1.0, 5))

    constant = sample_field(FieldSpec.constant(2.5), grid, tg)
    assert constant.shape == (5, 5)
    assert np.all(constant == 2.5)


def test_y_in_one_dimensional_problem_is_rejected():
    grid = build_grid([1.0], [5])
    tg = build_time_grid(1.0, 4)
    with pytest.raises(EvaluationError):
        sample_field(FieldSpec.from_text("x + y"), grid, tg)


def test_single_axis_table_is_exact_at_knots():
    tg = build_time_grid(1.0, 4)
    spec = FieldSpec.from_table({"t": tg.times}, [3.0, 1.0, 4.0, 1.0, 5.0])
    np.testing.assert_array_equal(sample_series(spec, tg), [3.0, 1.0, 4.0, 1.0, 5.0])
    assert spec.evaluate(t=0.125) == pytest.approx(2.0)


def test_table_outside_coverage_raises():
    spec = FieldSpec.from_table({"t": [0.0, 0.5]}, [1.0, 2.0])
    with pytest.raises(FieldCoverageError):
        sample_series(spec, build_time_grid(1.0, 4))


def test_two_axis_table_interpolates_bilinearly():
    spec = FieldSpec.from_table({"t": [0.0, 1.0], "x": [0.0, 1.0]}, [[0.0, 1.0], [2.0, 3.0]])
    assert float(spec.evaluate(t=np.array(0.5), x=np.array(0.5))) == pytest.approx(1.5)


def test_series_rejects_spatial_dependence():
    with pytest.raises(EvaluationError):
        sample_series(FieldSpec.from_text("t*x"), build_time_grid(1.0, 2))
