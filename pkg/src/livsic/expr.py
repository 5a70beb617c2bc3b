"""A small formula language for generators on the 2-torus.

Formulas are Python expressions over a fixed vocabulary::

    x1, x2                 coordinates, only inside sin/cos
    sin(u), cos(u)         evaluated at 2*pi*u; u must be an integer
                           combination of x1, x2 and integers
    exp(E), inv(E)         ring exponential and inverse
    scale(s, E)            scalar s times element E
    I                      ring identity
    NAME                   entry of the constants table (scalar or matrix)
    + - * /                ``*`` between elements is the ring product;
                           ``/`` only between scalars

Everything is evaluated on whole coordinate arrays at once.
"""
from __future__ import annotations

import ast
import math

import numpy as np

from .ring import exp_stack, inverses

_FUNCS = {"sin", "cos", "exp", "inv", "scale"}


class FormulaError(ValueError):
    pass


class Formula:
    def __init__(self, text: str, constants: dict | None = None, dim: int = 1):
        self.text = text
        self.dim = dim
        self.constants = {}
        for name, value in (constants or {}).items():
            arr = np.array(value, dtype=float)
            if arr.ndim == 0:
                self.constants[name] = ("s", float(arr))
            elif arr.shape == (dim, dim):
                self.constants[name] = ("e", arr)
            else:
                raise FormulaError(f"constant {name!r} has shape {arr.shape}, ring needs {(dim, dim)}")
        try:
            self.tree = ast.parse(text, mode="eval").body
        except SyntaxError as exc:
            raise FormulaError(f"cannot parse formula {text!r}: {exc.msg}") from exc
        self._check(self.tree, inside_trig=False)

    def _check(self, node, inside_trig):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise FormulaError(f"unsupported literal {node.value!r}")
        elif isinstance(node, ast.Name):
            if node.id in ("x1", "x2"):
                if not inside_trig:
                    raise FormulaError("coordinates may only appear inside sin/cos")
            elif node.id not in ("I", "pi") and node.id not in self.constants:
                raise FormulaError(f"unknown name {node.id!r}")
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand, inside_trig)
        elif isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
            self._check(node.left, inside_trig)
            self._check(node.right, inside_trig)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            name = node.func.id
            if node.keywords:
                raise FormulaError("keyword arguments are not supported")
            want = 2 if name == "scale" else 1
            if len(node.args) != want:
                raise FormulaError(f"{name} takes {want} argument(s)")
            if name in ("sin", "cos"):
                self._integer_form(node.args[0])
                return
            for arg in node.args:
                self._check(arg, inside_trig)
        else:
            raise FormulaError(f"unsupported syntax: {ast.dump(node)}")

    def _integer_form(self, node) -> tuple[int, int, int]:
        """Coefficients (c1, c2, c0) of an integer combination c1*x1 + c2*x2 + c0."""
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return 0, 0, node.value
        if isinstance(node, ast.Name) and node.id in ("x1", "x2"):
            return (1, 0, 0) if node.id == "x1" else (0, 1, 0)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            a = self._integer_form(node.operand)
            return -a[0], -a[1], -a[2]
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub)):
            a, b = self._integer_form(node.left), self._integer_form(node.right)
            sign = 1 if isinstance(node.op, ast.Add) else -1
            return a[0] + sign * b[0], a[1] + sign * b[1], a[2] + sign * b[2]
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
            a, b = self._integer_form(node.left), self._integer_form(node.right)
            if a[:2] == (0, 0):
                return a[2] * b[0], a[2] * b[1], a[2] * b[2]
            if b[:2] == (0, 0):
                return b[2] * a[0], b[2] * a[1], b[2] * a[2]
        raise FormulaError("sin/cos arguments must be integer combinations of x1, x2")

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        """Values at ``coords`` (shape (N, 2)); returns shape (N, d, d)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        kind, val = self._eval(self.tree, coords)
        return self._as_element(kind, val, len(coords))

    def _as_element(self, kind, val, count):
        eye = np.eye(self.dim)
        if kind == "s":
            val = np.broadcast_to(np.asarray(val, dtype=float), (count,))
            return val[:, None, None] * eye
        return np.broadcast_to(val, (count, self.dim, self.dim)).copy()

    def _eval(self, node, coords):
        n = len(coords)
        if isinstance(node, ast.Constant):
            return "s", float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "I":
                return "e", np.eye(self.dim)
            if node.id == "pi":
                return "s", math.pi
            return self.constants[node.id]
        if isinstance(node, ast.UnaryOp):
            kind, val = self._eval(node.operand, coords)
            return kind, (-val if isinstance(node.op, ast.USub) else val)
        if isinstance(node, ast.BinOp):
            lk, lv = self._eval(node.left, coords)
            rk, rv = self._eval(node.right, coords)
            return self._binop(node.op, lk, lv, rk, rv, n)
        name = node.func.id
        if name in ("sin", "cos"):
            c1, c2, c0 = self._integer_form(node.args[0])
            phase = 2.0 * math.pi * (c1 * coords[:, 0] + c2 * coords[:, 1] + c0)
            return "s", np.sin(phase) if name == "sin" else np.cos(phase)
        if name == "scale":
            sk, sv = self._eval(node.args[0], coords)
            ek, ev = self._eval(node.args[1], coords)
            if sk != "s":
                raise FormulaError("first argument of scale must be scalar")
            return self._binop(ast.Mult(), sk, sv, ek, ev, n)
        kind, val = self._eval(node.args[0], coords)
        if name == "exp":
            if kind == "s":
                return "s", np.exp(val)
            return "e", exp_stack(np.broadcast_to(val, (n, self.dim, self.dim)))
        if kind == "s":
            return "s", 1.0 / np.asarray(val)
        return "e", inverses(np.broadcast_to(val, (n, self.dim, self.dim)))

    def _binop(self, op, lk, lv, rk, rv, n):
        eye = np.eye(self.dim)

        def col(v):
            return np.asarray(v, dtype=float)[..., None, None] if np.ndim(v) else float(v)

        if lk == rk == "s":
            if isinstance(op, ast.Add):
                return "s", lv + rv
            if isinstance(op, ast.Sub):
                return "s", lv - rv
            if isinstance(op, ast.Mult):
                return "s", lv * rv
            return "s", lv / rv
        if isinstance(op, ast.Div):
            raise FormulaError("division is only defined between scalars")
        if isinstance(op, ast.Mult):
            if lk == "s":
                return "e", col(lv) * rv
            if rk == "s":
                return "e", lv * col(rv)
            return "e", np.matmul(lv, rv)
        a = col(lv) * eye if lk == "s" else lv
        b = col(rv) * eye if rk == "s" else rv
        return "e", (a + b if isinstance(op, ast.Add) else a - b)
