"""Index-sequence rules ``k -> s(k)`` used for exponents and coefficient logs.

Two input forms are accepted:

* the power-log family ``{"c": c, "p": p, "q": q}`` meaning
  ``c * k**p * ln(k + e)**q``;
* a short arithmetic string in the single variable ``k``, e.g. ``"k"``,
  ``"2*ln(k+2)"``, ``"(k+1)/10"``, ``"k*(1 + k % 2)"``.

Strings are parsed with :mod:`ast` and only a closed set of nodes is allowed,
so no user code is ever executed.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

_FUNCS = {
    "ln": np.log,
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "floor": np.floor,
}
_CONSTS = {"e": math.e, "pi": math.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
    ast.Mod: np.mod,
}


class RuleError(ValueError):
    """Raised for malformed or unsupported sequence rules."""


def _check(node: ast.AST) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise RuleError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise RuleError("only unary +/- allowed")
        _check(node.operand)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise RuleError(f"constant {node.value!r} not allowed")
    elif isinstance(node, ast.Name):
        if node.id != "k" and node.id not in _CONSTS:
            raise RuleError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise RuleError("only ln, log, exp, sqrt, abs, floor may be called")
        if len(node.args) != 1 or node.keywords:
            raise RuleError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0])
    else:
        raise RuleError(f"syntax {type(node).__name__} not allowed")


def _eval(node: ast.AST, k: np.ndarray) -> Any:
    if isinstance(node, ast.Expression):
        return _eval(node.body, k)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, k), _eval(node.right, k))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, k)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return k if node.id == "k" else _CONSTS[node.id]
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], k))
    raise RuleError("unreachable")  # pragma: no cover


@dataclass(frozen=True)
class SeqRule:
    """A deterministic real sequence indexed by ``k >= 0``."""

    source: str | None = None
    c: float = 1.0
    p: float = 0.0
    q: float = 0.0
    _tree: ast.Expression | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.source is None:
            return
        text = self.source.replace("^", "**").strip()
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise RuleError(f"cannot parse rule {self.source!r}: {exc.msg}") from None
        _check(tree)
        object.__setattr__(self, "_tree", tree)

    @classmethod
    def parse(cls, spec: Any) -> "SeqRule":
        if isinstance(spec, SeqRule):
            return spec
        if isinstance(spec, bool):
            raise RuleError("boolean is not a sequence rule")
        if isinstance(spec, (int, float)):
            return cls(source=repr(float(spec)))
        if isinstance(spec, str):
            return cls(source=spec)
        if isinstance(spec, dict):
            unknown = set(spec) - {"c", "p", "q"}
            if unknown:
                raise RuleError(f"unknown power-log keys {sorted(unknown)}")
            return cls(c=float(spec.get("c", 1.0)), p=float(spec.get("p", 0.0)),
                       q=float(spec.get("q", 0.0)))
        raise RuleError(f"unsupported rule spec {spec!r}")

    def __call__(self, k: Any) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        with np.errstate(all="ignore"):
            if self._tree is None:
                out = self.c * np.power(k, self.p) * np.power(np.log(k + math.e), self.q)
            else:
                out = _eval(self._tree, k)
        return np.broadcast_to(np.asarray(out, dtype=float), k.shape).copy()

    def values(self, K: int) -> np.ndarray:
        return self(np.arange(K))

    def to_json(self) -> Any:
        if self.source is not None:
            return self.source
        return {"c": self.c, "p": self.p, "q": self.q}
