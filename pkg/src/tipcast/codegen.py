"""Compile field expressions into scalar closures for the hot loops.

The tree-walking evaluator in expr.py is the reference semantics; this
module turns the same AST into straight-line Python source for

    value_fn(t, x, p)  -> g(t, x)
    triple_fn(t, x, p) -> (g, g_x, g_xx)

where p is a float64 vector holding the bound parameters in sorted name
order. The source is exec'd and jitted, so a solver core that receives
these closures never touches Python objects per step. Compilation is
cached on the generated source text: rebinding parameters (the common
case during bisection) reuses the compiled functions with a new p.

Derivatives follow the same second-order forward rules as
expr.HyperDual; subtrees that cannot depend on x keep literal "0.0"
derivative slots so the emitted code stays close to what one would
write by hand.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ._jit import maybe_njit
from .errors import UnboundParameterError
from .expr import Bin, FieldExpr, Func, Neg, Node, Num, Param, Pow, Prim
from .expr import ScalarField, Var
from .transitions import (bump_val, impulse_future_val, impulse_val,
                          shepherd_triple, step_val)

_ZERO = "0.0"

_FUNC_NAME = {
    "sin": "math.sin",
    "cos": "math.cos",
    "tan": "math.tan",
    "arctan": "math.atan",
    "sqrt": "math.sqrt",
    "exp": "math.exp",
}


def _fmt_const(v: float) -> str:
    return repr(float(v))


class _Emitter:
    """Accumulates SSA assignments while walking an AST."""

    def __init__(self, param_index: Mapping[str, int], derivs: bool) -> None:
        self.lines: list[str] = []
        self.param_index = param_index
        self.derivs = derivs
        self._n = 0

    def tmp(self, rhs: str) -> str:
        name = f"v{self._n}"
        self._n += 1
        self.lines.append(f"{name} = {rhs}")
        return name

    def add(self, *terms: str) -> str:
        live = [s for s in terms if s != _ZERO]
        if not live:
            return _ZERO
        return self.tmp(" + ".join(live)) if len(live) > 1 else live[0]

    def mul(self, a: str, b: str) -> str:
        if a == _ZERO or b == _ZERO:
            return _ZERO
        if a == "1.0":
            return b
        if b == "1.0":
            return a
        return self.tmp(f"{a}*{b}")

    def neg(self, a: str) -> str:
        return _ZERO if a == _ZERO else self.tmp(f"-{a}")

    # -- node dispatch: returns (value, d/dx, d2/dx2) symbol names --------

    def walk(self, node: Node) -> tuple[str, str, str]:
        if isinstance(node, Num):
            return _fmt_const(node.value), _ZERO, _ZERO
        if isinstance(node, Var):
            if node.name == "x":
                return "x", ("1.0" if self.derivs else _ZERO), _ZERO
            return "t", _ZERO, _ZERO
        if isinstance(node, Param):
            return f"p[{self.param_index[node.name]}]", _ZERO, _ZERO
        if isinstance(node, Neg):
            v, d, s = self.walk(node.arg)
            return self.neg(v), self.neg(d), self.neg(s)
        if isinstance(node, Bin):
            return self._bin(node)
        if isinstance(node, Pow):
            return self._pow(node)
        if isinstance(node, Func):
            return self._func(node)
        if isinstance(node, Prim):
            return self._prim(node)
        raise TypeError(f"unknown node {node!r}")

    def _bin(self, node: Bin) -> tuple[str, str, str]:
        av, ad, as_ = self.walk(node.lhs)
        bv, bd, bs = self.walk(node.rhs)
        if node.op == "+":
            return self.add(av, bv), self.add(ad, bd), self.add(as_, bs)
        if node.op == "-":
            v = self.tmp(f"{av} - {bv}")
            d = self.add(ad, self.neg(bd))
            s = self.add(as_, self.neg(bs))
            return v, d, s
        if node.op == "*":
            v = self.tmp(f"{av}*{bv}")
            d = self.add(self.mul(ad, bv), self.mul(av, bd))
            s = self.add(self.mul(as_, bv),
                         self.mul("2.0", self.mul(ad, bd)),
                         self.mul(av, bs))
            return v, d, s
        # division uses the recurrences d = (a' - v b')/b, s = (a'' - 2 d b' - v b'')/b
        v = self.tmp(f"{av}/{bv}")
        num_d = self.add(ad, self.neg(self.mul(v, bd)))
        d = _ZERO if num_d == _ZERO else self.tmp(f"{num_d}/{bv}")
        num_s = self.add(as_,
                         self.neg(self.mul("2.0", self.mul(d, bd))),
                         self.neg(self.mul(v, bs)))
        s = _ZERO if num_s == _ZERO else self.tmp(f"{num_s}/{bv}")
        return v, d, s

    def _ipow(self, u: str, n: int) -> str:
        if n == 0:
            return "1.0"
        if n == 1:
            return u
        if n == 2:
            return self.tmp(f"{u}*{u}")
        if n == 3:
            return self.tmp(f"{u}*{u}*{u}")
        return self.tmp(f"{u}**{n}")

    def _pow(self, node: Pow) -> tuple[str, str, str]:
        uv, ud, us = self.walk(node.base)
        n = node.exponent
        if n == 0:
            return "1.0", _ZERO, _ZERO
        if n == 1:
            return uv, ud, us
        if ud == _ZERO and us == _ZERO:
            return self._ipow(uv, n), _ZERO, _ZERO
        pm1 = self._ipow(uv, n - 1)
        v = self.mul(pm1, uv) if n >= 2 else self._ipow(uv, n)
        cn = _fmt_const(n)
        d = self.mul(cn, self.mul(pm1, ud))
        pm2 = self._ipow(uv, n - 2)
        s = self.add(
            self.mul(_fmt_const(n * (n - 1)), self.mul(pm2, self.mul(ud, ud))),
            self.mul(cn, self.mul(pm1, us)))
        return v, d, s

    def _func(self, node: Func) -> tuple[str, str, str]:
        uv, ud, us = self.walk(node.arg)
        fn = _FUNC_NAME[node.name]
        v = self.tmp(f"{fn}({uv})")
        if ud == _ZERO and us == _ZERO:
            return v, _ZERO, _ZERO
        if node.name == "sin":
            fp = self.tmp(f"math.cos({uv})")
            fpp = self.neg(v)
        elif node.name == "cos":
            fp = self.neg(self.tmp(f"math.sin({uv})"))
            fpp = self.neg(v)
        elif node.name == "tan":
            fp = self.tmp(f"1.0 + {v}*{v}")
            fpp = self.tmp(f"2.0*{v}*{fp}")
        elif node.name == "arctan":
            den = self.tmp(f"1.0 + {uv}*{uv}")
            fp = self.tmp(f"1.0/{den}")
            fpp = self.tmp(f"-2.0*{uv}*{fp}*{fp}")
        elif node.name == "sqrt":
            fp = self.tmp(f"0.5/{v}")
            fpp = self.tmp(f"-0.5*{fp}/{uv}")
        else:  # exp
            fp = v
            fpp = v
        d = self.mul(fp, ud)
        s = self.add(self.mul(fpp, self.mul(ud, ud)), self.mul(fp, us))
        return v, d, s

    def _prim(self, node: Prim) -> tuple[str, str, str]:
        shape = [self.walk(a)[0] for a in node.shape]
        if node.name == "splinebump":
            u = self.walk(node.main[0])[0]
            return (self.tmp(f"bump_val({u}, {shape[0]}, {shape[1]})"),
                    _ZERO, _ZERO)
        if node.name == "splinestep":
            u = self.walk(node.main[0])[0]
            return (self.tmp(f"step_val({u}, {shape[0]}, {shape[1]})"),
                    _ZERO, _ZERO)
        if node.name == "impulseseries":
            u = self.walk(node.main[0])[0]
            amp_div = shape[5] if len(shape) == 6 else "20.0"
            args = ", ".join([u] + shape[:5] + [amp_div])
            return self.tmp(f"impulse_val({args})"), _ZERO, _ZERO
        if node.name == "impulsetrain":
            u = self.walk(node.main[0])[0]
            args = ", ".join([u] + shape)
            return self.tmp(f"impulse_future_val({args})"), _ZERO, _ZERO
        # shepherd: derivative flows through the second slot only
        u = self.walk(node.main[0])[0]
        sv, sd, ss = self.walk(node.main[1])
        args = ", ".join([u, sv] + shape)
        base = f"g{self._n}"
        self._n += 1
        self.lines.append(
            f"{base}v, {base}d, {base}s = shepherd_triple({args})")
        if sd == _ZERO and ss == _ZERO:
            return f"{base}v", _ZERO, _ZERO
        d = self.mul(f"{base}d", sd)
        s = self.add(self.mul(f"{base}s", self.mul(sd, sd)),
                     self.mul(f"{base}d", ss))
        return f"{base}v", d, s


def _render(expr: FieldExpr, param_order: tuple[str, ...]) -> str:
    index = {name: i for i, name in enumerate(param_order)}

    def body(derivs: bool) -> str:
        em = _Emitter(index, derivs)
        v, d, s = em.walk(expr.ast)
        ret = f"return {v}, {d}, {s}" if derivs else f"return {v}"
        lines = em.lines + [ret]
        return "\n".join("    " + ln for ln in lines)

    return (f"def value_fn(t, x, p):\n{body(False)}\n\n\n"
            f"def triple_fn(t, x, p):\n{body(True)}\n")


@dataclass(frozen=True)
class CompiledField:
    """Jitted closures for one expression structure."""

    source: str
    param_order: tuple[str, ...]
    value_fn: Callable[[float, float, np.ndarray], float]
    triple_fn: Callable[[float, float, np.ndarray],
                        tuple[float, float, float]]

    def param_vector(self, bindings: Mapping[str, float]) -> np.ndarray:
        missing = [n for n in self.param_order if n not in bindings]
        if missing:
            raise UnboundParameterError(missing[0])
        return np.array([float(bindings[n]) for n in self.param_order],
                        dtype=np.float64)

    def bind(self, bindings: Mapping[str, float]) -> "BoundField":
        return BoundField(self, self.param_vector(bindings))


@dataclass(frozen=True)
class BoundField:
    """A compiled structure plus one parameter vector."""

    compiled: CompiledField
    p: np.ndarray

    @property
    def value_fn(self) -> Callable:
        return self.compiled.value_fn

    @property
    def triple_fn(self) -> Callable:
        return self.compiled.triple_fn

    def value(self, t: float, x: float) -> float:
        return self.compiled.value_fn(t, x, self.p)

    def triple(self, t: float, x: float) -> tuple[float, float, float]:
        return self.compiled.triple_fn(t, x, self.p)


_cache: dict[tuple[tuple[str, ...], str], CompiledField] = {}
_cache_lock = threading.Lock()

_EXEC_GLOBALS = {
    "math": math,
    "bump_val": bump_val,
    "step_val": step_val,
    "impulse_val": impulse_val,
    "impulse_future_val": impulse_future_val,
    "shepherd_triple": shepherd_triple,
}


def compile_expr(expr: FieldExpr) -> CompiledField:
    """Compile an expression; results are cached per emitted source."""
    param_order = tuple(sorted(expr.params))
    source = _render(expr, param_order)
    # the source refers to parameters only by index, so the names must be
    # part of the key: fields differing only in a parameter name would
    # otherwise collide
    key = (param_order, source)
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            return hit
        ns: dict = {}
        exec(compile(source, "<tipcast-field>", "exec"), dict(_EXEC_GLOBALS), ns)
        compiled = CompiledField(
            source=source,
            param_order=param_order,
            value_fn=maybe_njit(ns["value_fn"]),
            triple_fn=maybe_njit(ns["triple_fn"]),
        )
        _cache[key] = compiled
        return compiled


def compile_field(field: ScalarField) -> BoundField:
    """Compile a bound field into closures plus its parameter vector."""
    return compile_expr(field.expr).bind(field.bindings)
