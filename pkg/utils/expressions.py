"""
Sandboxed evaluation of user-supplied density expressions such as
``"log1p(x / 2)"``.  Only arithmetic on the variable ``x`` and a fixed set of
numpy functions is allowed.
"""

import ast

import numpy as np


class ExpressionError(Exception):
    """Exception raised for unsafe or invalid density expressions."""


ALLOWED_FUNCTIONS = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "expm1": np.expm1,
    "log": np.log,
    "log1p": np.log1p,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
}

ALLOWED_CONSTANTS = {"pi": np.pi, "e": np.e}

_ALLOWED_NODES = {
    ast.Expression,
    ast.Load,
    ast.Name,
    ast.Constant,
    ast.UnaryOp,
    ast.BinOp,
    ast.Compare,
    ast.Call,
    # Operators
    ast.USub,
    ast.UAdd,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
}


def _check_node(node, variables):
    """
    Checks a single AST node against the whitelist of allowed operations.
    """
    if type(node) not in _ALLOWED_NODES:
        raise ExpressionError(f"Operation '{type(node).__name__}' is not allowed.")

    if isinstance(node, ast.Name):
        if node.id.startswith("__"):
            raise ExpressionError(
                f"Access to private attribute '{node.id}' is not allowed."
            )
        known = set(ALLOWED_FUNCTIONS) | set(ALLOWED_CONSTANTS) | set(variables)
        if node.id not in known:
            raise ExpressionError(f"Unknown name '{node.id}'.")

    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in ALLOWED_FUNCTIONS:
            raise ExpressionError("Only whitelisted numpy functions may be called.")
        if node.keywords:
            raise ExpressionError("Keyword arguments are not allowed.")

    if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
        raise ExpressionError(f"Constant {node.value!r} is not a number.")


def validate_expression(expression: str, variables=("x",)):
    """
    Parses the expression and ensures it only contains allowed operations.

    Args:
        expression (str): The expression string to validate.
        variables (tuple): Names the expression may refer to.

    Raises:
        ExpressionError: If the expression is invalid or contains unsafe operations.
    """
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"Invalid syntax: {e}") from e

    for node in ast.walk(tree):
        _check_node(node, variables)
    return tree


def safe_eval(expression: str, local_vars=None):
    """
    Safely evaluates an arithmetic expression with numpy semantics.

    Args:
        expression (str): The expression to evaluate.
        local_vars (dict): Variables to make available, e.g. {"x": array}.

    Returns:
        The result of the evaluation.
    """
    local_vars = dict(local_vars or {})
    tree = validate_expression(expression, variables=tuple(local_vars))

    # __builtins__ disabled so that open, __import__ etc. are unreachable
    safe_globals = {"__builtins__": {}}
    safe_globals.update(ALLOWED_FUNCTIONS)
    safe_globals.update(ALLOWED_CONSTANTS)

    code = compile(tree, "<density>", "eval")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return eval(code, safe_globals, local_vars)


def evaluate_on_samples(expression: str, samples):
    """
    Evaluate an expression in ``x`` on a vector of sample points.

    Args:
        expression (str): Expression in the variable ``x``.
        samples (array-like): Points at which to evaluate.

    Returns:
        numpy float array with one value per sample.

    Raises:
        ExpressionError: If the expression is unsafe or yields non-finite values.
    """
    x = np.asarray(samples, dtype=float)
    values = np.broadcast_to(
        np.asarray(safe_eval(expression, {"x": x}), dtype=float), x.shape
    )
    if not np.all(np.isfinite(values)):
        raise ExpressionError(f"Expression '{expression}' is not finite on samples.")
    return np.array(values)
