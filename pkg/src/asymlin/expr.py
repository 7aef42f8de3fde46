"""Closed-form weights in x: + - * / ^, parentheses, x1..x3, pi, sin cos exp abs."""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
_VARS = {"x1": 0, "x2": 1, "x3": 2}
_CONSTS = {"pi": np.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _check(node, text):
    if isinstance(node, ast.Expression):
        return _check(node.body, text)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, text)
        _check(node.right, text)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        _check(node.operand, text)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        pass
    elif isinstance(node, ast.Name) and (node.id in _VARS or node.id in _CONSTS):
        pass
    elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
          and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        _check(node.args[0], text)
    else:
        raise ConfigError(f"unsupported syntax in expression {text!r}")


def _eval(node, x):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, x), _eval(node.right, x))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, x)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        k = _VARS[node.id]
        if k >= x.shape[-1]:
            raise ConfigError(f"{node.id} used on a {x.shape[-1]}-dimensional domain")
        return x[..., k]
    return _FUNCS[node.func.id](_eval(node.args[0], x))


@dataclass(frozen=True)
class Expression:
    """A weight x -> value parsed from text; ``^`` is exponentiation."""

    text: str
    _tree: ast.Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        src = self.text.replace("^", "**")
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {self.text!r}: {exc.msg}") from None
        _check(tree, self.text)
        object.__setattr__(self, "_tree", tree)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        with np.errstate(all="ignore"):
            out = _eval(self._tree.body, x)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy()

    def is_constant(self) -> bool:
        return not any(isinstance(n, ast.Name) and n.id in _VARS for n in ast.walk(self._tree))


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, x):
        return float(self.value)

    def is_constant(self) -> bool:
        return True


def as_weight(spec):
    """Weight from a number, numeric string, expression string or callable."""
    if isinstance(spec, (Constant, Expression)):
        return spec
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Constant(float(spec))
    if isinstance(spec, str):
        try:
            return Constant(float(spec))
        except ValueError:
            return Expression(spec.strip())
    if callable(spec):
        return spec
    raise ConfigError(f"cannot interpret {spec!r} as a weight")
