"""Tiny arithmetic expression language used by coefficient configs.

Grammar: numbers, the variables given at compile time, ``+ - * / ^``,
unary minus and the functions ``sin``, ``cos``, ``exp``. ``^`` is power.
"""
import ast

import numpy as np

from .errors import ValidationError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _check(node, variables):
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ValidationError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ValidationError("only unary +/- allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ValidationError("only sin, cos, exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise ValidationError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise ValidationError(f"unknown variable {node.id!r}; allowed: {sorted(variables)}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ValidationError(f"bad literal {node.value!r}")
    else:
        raise ValidationError(f"syntax {type(node).__name__} not allowed")


def _eval(node, env):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id]
    return float(node.value)


class Expression:
    """A compiled expression, callable with keyword arrays.

    >>> Expression("1+x^2", ("x", "y"))(x=2.0, y=0.0)
    5.0
    """

    def __init__(self, source, variables):
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ValidationError(f"cannot parse expression {source!r}: {exc.msg}") from None
        _check(tree, set(self.variables))
        self._body = tree.body

    def __call__(self, **values):
        env = {k: np.asarray(values[k], dtype=float) for k in self.variables}
        out = _eval(self._body, env)
        shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else ()
        out = np.broadcast_to(np.asarray(out, dtype=float), shape)
        return float(out) if out.ndim == 0 else np.array(out)

    def __repr__(self):
        return f"Expression({self.source!r}, {self.variables!r})"
