"""Tiny safe expression language for problem files.

Grammar: arithmetic (+ - * /), powers (** or ^), unary minus, the functions
sin, cos, exp, the constants pi and e, numeric literals, and the declared
variable names (``x`` for coefficients, ``x`` and ``t`` for kernels).
Anything else is rejected with a position, never evaluated.
"""

import ast
import math

import numpy as np

from .errors import ExpressionError

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


def _reject(node, message, source):
    line = getattr(node, "lineno", 1)
    col = getattr(node, "col_offset", 0) + 1
    raise ExpressionError(message, line=line, column=col, source=source)


def _check(node, variables, source):
    if isinstance(node, ast.Expression):
        _check(node.body, variables, source)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            _reject(node, f"operator {type(node.op).__name__} not allowed", source)
        _check(node.left, variables, source)
        _check(node.right, variables, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            _reject(node, f"unary {type(node.op).__name__} not allowed", source)
        _check(node.operand, variables, source)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            _reject(node, f"literal {node.value!r} not allowed", source)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTANTS:
            _reject(node, f"unknown name '{node.id}'", source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            _reject(node, "only sin, cos, exp may be called", source)
        if len(node.args) != 1 or node.keywords:
            _reject(node, f"{node.func.id} takes exactly one argument", source)
        _check(node.args[0], variables, source)
    else:
        _reject(node, f"{type(node).__name__} not allowed", source)


def _evaluate(node, env):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.UnaryOp):
        val = _evaluate(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else +val
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        return _CONSTANTS[node.id]
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_evaluate(node.args[0], env))
    raise AssertionError("unreachable after _check")


def _fold(node):
    """Constant value of a variable-free subtree, or None."""
    try:
        _check(ast.Expression(body=node), (), "")
    except ExpressionError:
        return None
    return float(_evaluate(node, {}))


def compile_expression(source, variables=("x",), name="<expression>"):
    """Compile an expression string into a numpy-broadcasting callable.

    The callable takes one positional argument per entry of ``variables``
    (scalars or arrays) and returns a float array of the broadcast shape
    (a float for all-scalar input).  Raises ExpressionError with 1-based
    line/column on any construct outside the grammar.
    """
    if not isinstance(source, str):
        raise ExpressionError(f"{name}: expression must be a string, got {type(source).__name__}")
    # '^' is accepted as a power spelling; Python's ast would parse it as xor.
    prepared = source.replace("^", "**")
    try:
        tree = ast.parse(prepared, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(
            f"{name}: {exc.msg}", line=exc.lineno or 1, column=exc.offset or 1, source=source
        ) from None
    _check(tree, variables, source)

    constant = _fold(tree.body)

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"{name} expects {len(variables)} argument(s), got {len(args)}")
        arrays = [np.asarray(a, dtype=float) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        env = dict(zip(variables, arrays))
        out = _evaluate(tree, env)
        out = np.asarray(out, dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return float(out) if out.ndim == 0 else out

    fn.source = source
    fn.variables = tuple(variables)
    fn.constant_value = constant
    fn.__name__ = name
    return fn


def is_zero_expression(fn):
    """True when the compiled expression folds to the literal constant 0."""
    return getattr(fn, "constant_value", None) == 0.0
