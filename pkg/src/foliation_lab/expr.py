"""Closed-form scalar expressions used in scenario files.

The grammar is deliberately tiny: ``+ - * /``, unary minus, numeric
constants, ``pi``, the functions ``sin``, ``cos``, ``exp`` and a fixed set of
variable names. Anything else is rejected at parse time.
"""

from __future__ import annotations

import ast
import math

from .errors import ConfigError

FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
CONSTANTS = {"pi": math.pi}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)
_UNARY = (ast.UAdd, ast.USub)


class Expr:
    """A compiled expression over named variables.

    >>> Expr("2*sin(x0) + v1", ["x0", "v1"])(0.0, 3.0)
    3.0
    """

    def __init__(self, source, variables, pointer=""):
        self.source = str(source)
        self.variables = tuple(variables)
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {self.source!r}: {exc.msg}", pointer) from None
        self.used = set()
        self._check(tree.body, pointer)
        args = ", ".join(self.variables)
        code = f"lambda {args}: ({ast.unparse(tree.body)})"
        self._fn = eval(code, {"__builtins__": {}, **FUNCTIONS, **CONSTANTS})  # noqa: S307 - validated AST
        self.is_constant = not self.used
        self._value = float(self._fn(*([0.0] * len(self.variables)))) if self.is_constant else None

    def _check(self, node, pointer):
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            self._check(node.left, pointer)
            self._check(node.right, pointer)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARY):
            self._check(node.operand, pointer)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name):
            if node.id in CONSTANTS:
                return
            if node.id not in self.variables:
                raise ConfigError(f"unknown name {node.id!r} in {self.source!r}", pointer)
            self.used.add(node.id)
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in FUNCTIONS
            and len(node.args) == 1
            and not node.keywords
        ):
            self._check(node.args[0], pointer)
        else:
            raise ConfigError(f"unsupported construct {type(node).__name__} in {self.source!r}", pointer)

    def __call__(self, *values) -> float:
        if self._value is not None:
            return self._value
        return float(self._fn(*values))

    def __repr__(self):
        return f"Expr({self.source!r})"


def base_vars(d):
    return [f"x{i}" for i in range(d)]


def fiber_vars(n):
    return [f"v{i}" for i in range(n)]
