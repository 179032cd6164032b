import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodalrec.errors import ExpressionError
from nodalrec.expressions import compile_expression, is_zero_expression


def test_basic_eval():
    f = compile_expression("x/2 - pi/4", ("x",))
    assert f(math.pi / 2) == pytest.approx(0.0)
    assert f(0.0) == pytest.approx(-math.pi / 4)


def test_two_variable_kernel():
    k = compile_expression("sin((x+t)/2) - 2/pi", ("x", "t"))
    assert k(0.3, 0.1) == pytest.approx(math.sin(0.2) - 2 / math.pi)


def test_vectorized_broadcast():
    f = compile_expression("cos(x)", ("x",))
    xs = np.linspace(0, math.pi, 7)
    assert np.allclose(f(xs), np.cos(xs))


def test_constants_and_functions():
    f = compile_expression("exp(1) - e", ("x",))
    assert abs(f(0.0)) < 1e-15


def test_zero_detection():
    assert is_zero_expression(compile_expression("0", ("x",)))
    assert is_zero_expression(compile_expression("0.0", ("x",)))
    assert not is_zero_expression(compile_expression("x", ("x",)))


@pytest.mark.parametrize("bad", [
    "import os",
    "__builtins__",
    "x.__class__",
    "lambda y: y",
    "open('f')",
    "x; x",
    "unknown_fn(x)",
    "t",  # undeclared variable for a 1-var expression
])
def test_rejected_sources(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad, ("x",))


def test_syntax_error_carries_location():
    with pytest.raises(ExpressionError) as info:
        compile_expression("sin(x", ("x",))
    assert "column" in str(info.value)


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_polynomial_matches_python(x):
    f = compile_expression("x*x/3 + 2*x - 1", ("x",))
    assert f(x) == pytest.approx(x * x / 3 + 2 * x - 1, rel=1e-12, abs=1e-12)
