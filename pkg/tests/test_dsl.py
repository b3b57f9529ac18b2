import numpy as np
import pytest

from deadbeat import dsl
from deadbeat.errors import ParseError


def ev(text, x=(), u=(), n=None, m=None):
    node = dsl.parse_expression(text, n=n, m=m)
    return float(dsl.evaluate(node, np.atleast_1d(np.asarray(x, float)),
                              np.atleast_1d(np.asarray(u, float))))


def test_precedence_and_arithmetic():
    assert ev("1 + 2*3") == 7.0
    assert ev("(1 + 2)*3") == 9.0
    assert ev("2*-3") == -6.0
    assert ev("8/4/2") == 1.0
    assert ev("1 - 2 - 3") == -4.0


def test_variables_and_power():
    assert ev("x1 + u1", x=[2.0], u=[3.0]) == 5.0
    assert ev("x1^2", x=[-3.0]) == 9.0
    # unary minus wraps the whole powered atom
    assert ev("-x1^2", x=[2.0]) == -4.0
    assert ev("x1^-1", x=[4.0]) == 0.25
    assert ev("x1/2 + u1^3", x=[1.0], u=[0.0]) == 0.5


def test_functions():
    assert ev("sin(0)") == 0.0
    assert ev("cos(0)") == 1.0
    assert ev("tanh(0)") == 0.0
    assert ev("exp(0)") == 1.0
    assert ev("abs(-2)") == 2.0
    assert ev("min(2, -3)") == -3.0
    assert ev("max(x1, u1)", x=[0.5], u=[1.5]) == 1.5


def test_evaluate_broadcasts_over_batches():
    node = dsl.parse_expression("x1^2 + u1*x2", n=2, m=1)
    xs = np.array([[1.0, 2.0], [3.0, -1.0], [0.0, 0.5]])
    us = np.array([[2.0], [0.5], [-1.0]])
    batch = dsl.evaluate(node, xs, us)
    rows = [float(dsl.evaluate(node, xs[i], us[i])) for i in range(3)]
    assert batch.tolist() == rows


@pytest.mark.parametrize("text", ["x1 +", "x1 $ 2", "min(x1)", "max(1, 2, 3)",
                                  "foo(x1)", "y1 + 1", "x1^2.5", "x1^u1", "()"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        dsl.parse_expression(text, n=2, m=2)


def test_dimension_check_catches_out_of_range_variables():
    dsl.parse_expression("x2 + u1", n=2, m=1)
    with pytest.raises(ParseError) as err:
        dsl.parse_expression("x2 + u1", n=1, m=1)
    assert "x2" in str(err.value)
    with pytest.raises(ParseError):
        dsl.parse_expression("u2", n=1, m=1)


def test_error_positions_are_reported():
    with pytest.raises(ParseError) as err:
        dsl.parse_expression("x1 + $")
    assert err.value.line == 1
    assert err.value.column == 6


def test_division_by_zero_is_not_a_parse_concern():
    node = dsl.parse_expression("x1/u1", n=1, m=1)
    with np.errstate(all="ignore"):
        value = dsl.evaluate(node, np.array([1.0]), np.array([0.0]))
    assert not np.isfinite(float(value))
