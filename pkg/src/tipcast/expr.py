"""Scalar field expressions: parsing, evaluation, exact x-derivatives.

The grammar is standard infix over the variables t and x, free parameters
(any other identifier), float literals, + - * / and integer powers via ^,
the smooth unary functions sin, cos, tan, arctan, sqrt, exp, and calls into
the transition primitives:

    splinebump(u; rho, L)
    splinestep(u; rho, L)
    impulseseries(u; rho, L1, L2, dplus, d)
    impulsetrain(u; rho, L1, L2, dplus)
    shepherd(u, v; rho, L, c)

The semicolon separates main arguments from shape arguments. Time-slot
arguments and shape arguments must not contain x (the primitives are only C1
in their time argument, so an x-dependent time slot would break the C2
contract); shepherd's second argument is the state slot and carries the
x-derivative chain.

Derivatives with respect to x are computed by forward-mode evaluation of the
AST with second-order Taylor numbers (HyperDual), never by finite
differences. There are no t-derivatives anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

from .errors import DomainError, ParseError, UnboundParameterError
from . import transitions

__all__ = ["FieldExpr", "ScalarField", "HyperDual", "parse", "parse_field"]


FUNCTIONS = {"sin", "cos", "tan", "arctan", "sqrt", "exp"}

# primitive name -> (number of main args, allowed shape-arg counts)
# impulseseries optionally takes a sixth shape argument, the amplitude-rule
# divisor (default 20), so the alternative decay rule stays expressible;
# impulsetrain is its periodic constant-amplitude limit, needed so the future
# field of the impulse-train scenario is itself a parseable expression
PRIMITIVES = {
    "splinebump": (1, (2,)),
    "splinestep": (1, (2,)),
    "impulseseries": (1, (5, 6)),
    "impulsetrain": (1, (4,)),
    "shepherd": (2, (3,)),
}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "t" or "x"


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # "+", "-", "*", "/"
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class Prim:
    name: str
    main: tuple["Node", ...]
    shape: tuple["Node", ...]


Node = Union[Num, Var, Param, Neg, Bin, Pow, Func, Prim]


def _walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, Neg):
        yield from _walk(node.arg)
    elif isinstance(node, Bin):
        yield from _walk(node.lhs)
        yield from _walk(node.rhs)
    elif isinstance(node, Pow):
        yield from _walk(node.base)
    elif isinstance(node, Func):
        yield from _walk(node.arg)
    elif isinstance(node, Prim):
        for a in node.main + node.shape:
            yield from _walk(a)


def _contains_var(node: Node, name: str) -> bool:
    return any(isinstance(n, Var) and n.name == name for n in _walk(node))


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_OPS = set("+-*/^(),;")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", an operator char, or "eof"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                float(lit)
            except ValueError:
                raise ParseError(f"bad number literal {lit!r}", i, text)
            tokens.append(_Token("num", lit, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    tokens.append(_Token("eof", "", n))
    return tokens


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                tok.offset, self.text)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r}", tok.offset, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek().kind == "-":
            self.advance()
            return Neg(self.unary())
        if self.peek().kind == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            sign = 1
            if self.peek().kind == "-":
                self.advance()
                sign = -1
            tok = self.expect("num")
            if any(c in tok.text for c in ".eE"):
                raise ParseError("integer exponent required", tok.offset,
                                 self.text)
            return Pow(base, sign * int(tok.text))
        return base

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if self.peek().kind == "(":
                return self.call(name, tok.offset)
            if name in ("t", "x"):
                return Var(name)
            if name in FUNCTIONS or name in PRIMITIVES:
                raise ParseError(
                    f"function name {name!r} used without arguments",
                    tok.offset, self.text)
            return Param(name)
        raise ParseError(
            f"expected a value, found {tok.text or 'end of input'!r}",
            tok.offset, self.text)

    def call(self, name: str, offset: int) -> Node:
        self.expect("(")
        main: list[Node] = [self.expr()]
        while self.peek().kind == ",":
            self.advance()
            main.append(self.expr())
        shape: list[Node] = []
        if self.peek().kind == ";":
            self.advance()
            shape.append(self.expr())
            while self.peek().kind == ",":
                self.advance()
                shape.append(self.expr())
        self.expect(")")

        if name in FUNCTIONS:
            if shape or len(main) != 1:
                raise ParseError(
                    f"{name} takes exactly one argument", offset, self.text)
            return Func(name, main[0])
        if name in PRIMITIVES:
            n_main, n_shapes = PRIMITIVES[name]
            if len(main) != n_main or len(shape) not in n_shapes:
                raise ParseError(
                    f"{name} takes {n_main} main and "
                    f"{' or '.join(map(str, n_shapes))} shape arguments "
                    f"(after ';'), got {len(main)} and {len(shape)}",
                    offset, self.text)
            self._check_x_free(name, main, shape, offset)
            return Prim(name, tuple(main), tuple(shape))
        raise ParseError(f"unknown function {name!r}", offset, self.text)

    def _check_x_free(self, name: str, main: list[Node],
                      shape: list[Node], offset: int) -> None:
        # time-slot and shape arguments must be x-free: the bumps are only
        # C1 in their time argument, so x may only enter through shepherd's
        # dedicated state slot (which carries hand-coded derivatives)
        time_slots = main if name != "shepherd" else main[:1]
        for a in time_slots:
            if _contains_var(a, "x"):
                raise ParseError(
                    f"time argument of {name} must not depend on x",
                    offset, self.text)
        for a in shape:
            if _contains_var(a, "x") or _contains_var(a, "t"):
                raise ParseError(
                    f"shape arguments of {name} must be constant "
                    f"(parameters or literals)", offset, self.text)


# ---------------------------------------------------------------------------
# second-order Taylor numbers (value, d/dx, d2/dx2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperDual:
    """Second-order Taylor number along the x direction."""

    v: float
    d1: float = 0.0
    d2: float = 0.0

    def __add__(self, other):
        o = _lift(other)
        return HyperDual(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, other):
        o = _lift(other)
        return HyperDual(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        return _lift(other).__sub__(self)

    def __neg__(self):
        return HyperDual(-self.v, -self.d1, -self.d2)

    def __mul__(self, other):
        o = _lift(other)
        return HyperDual(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _lift(other)
        v = self.v / o.v
        d1 = (self.d1 - v * o.d1) / o.v
        d2 = (self.d2 - 2.0 * d1 * o.d1 - v * o.d2) / o.v
        return HyperDual(v, d1, d2)

    def __rtruediv__(self, other):
        return _lift(other).__truediv__(self)

    def pow_int(self, n: int) -> "HyperDual":
        if n == 0:
            return HyperDual(1.0)
        v = self.v ** n
        b1 = n * self.v ** (n - 1)
        d1 = b1 * self.d1
        if n == 1:
            b2 = 0.0
        else:
            b2 = n * (n - 1) * self.v ** (n - 2)
        d2 = b2 * self.d1 * self.d1 + b1 * self.d2
        return HyperDual(v, d1, d2)

    def chain(self, f: float, df: float, ddf: float) -> "HyperDual":
        """Compose with a scalar function given f, f', f'' at self.v."""
        return HyperDual(
            f, df * self.d1, ddf * self.d1 * self.d1 + df * self.d2)

    def sin(self):
        s, c = math.sin(self.v), math.cos(self.v)
        return self.chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.v), math.cos(self.v)
        return self.chain(c, -s, -c)

    def tan(self):
        v = math.tan(self.v)
        sec2 = 1.0 + v * v
        return self.chain(v, sec2, 2.0 * v * sec2)

    def arctan(self):
        den = 1.0 + self.v * self.v
        return self.chain(math.atan(self.v), 1.0 / den,
                          -2.0 * self.v / (den * den))

    def sqrt(self):
        r = math.sqrt(self.v)
        return self.chain(r, 0.5 / r, -0.25 / (r * r * r))

    def exp(self):
        e = math.exp(self.v)
        return self.chain(e, e, e)


def _lift(value) -> HyperDual:
    if isinstance(value, HyperDual):
        return value
    return HyperDual(float(value))


_FLOAT_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "arctan": math.atan, "sqrt": math.sqrt, "exp": math.exp,
}


def _as_float(value) -> float:
    if isinstance(value, HyperDual):
        return value.v
    return float(value)


def _eval_node(node: Node, t: float, x, env: Mapping[str, float]):
    """Tree walk; x may be a float or a HyperDual."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t if node.name == "t" else x
    if isinstance(node, Param):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundParameterError(node.name) from None
    if isinstance(node, Neg):
        return -_eval_node(node.arg, t, x, env)
    if isinstance(node, Bin):
        a = _eval_node(node.lhs, t, x, env)
        b = _eval_node(node.rhs, t, x, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        a = _eval_node(node.base, t, x, env)
        if isinstance(a, HyperDual):
            return a.pow_int(node.exponent)
        return a ** node.exponent
    if isinstance(node, Func):
        a = _eval_node(node.arg, t, x, env)
        if isinstance(a, HyperDual):
            return getattr(a, node.name)()
        return _FLOAT_FUNCS[node.name](a)
    if isinstance(node, Prim):
        return _eval_prim(node, t, x, env)
    raise TypeError(f"unknown node {node!r}")


def _eval_prim(node: Prim, t: float, x, env: Mapping[str, float]):
    # time-slot and shape args are x-free by construction, so they evaluate
    # to plain floats even when x is a HyperDual
    shape = [_as_float(_eval_node(a, t, x, env))
             for a in node.shape]
    if node.name == "splinebump":
        u = _as_float(_eval_node(node.main[0], t, x, env))
        return transitions.bump_val(u, shape[0], shape[1])
    if node.name == "splinestep":
        u = _as_float(_eval_node(node.main[0], t, x, env))
        return transitions.step_val(u, shape[0], shape[1])
    if node.name == "impulseseries":
        u = _as_float(_eval_node(node.main[0], t, x, env))
        amp_div = shape[5] if len(shape) == 6 else 20.0
        return transitions.impulse_val(u, shape[0], shape[1], shape[2],
                                       shape[3], shape[4], amp_div)
    if node.name == "impulsetrain":
        u = _as_float(_eval_node(node.main[0], t, x, env))
        return transitions.impulse_future_val(u, shape[0], shape[1],
                                              shape[2], shape[3])
    # shepherd
    u = _as_float(_eval_node(node.main[0], t, x, env))
    xv = _eval_node(node.main[1], t, x, env)
    rho, L, c = shape
    if isinstance(xv, HyperDual):
        v, vx, vxx = transitions.shepherd_triple(u, xv.v, rho, L, c)
        return xv.chain(v, vx, vxx)
    return transitions.shepherd_triple(u, float(xv), rho, L, c)[0]


# ---------------------------------------------------------------------------
# pretty printer
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 2, "pow": 3, "atom": 4}


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _pretty(node: Node, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(node, Num):
        s, prec = _fmt_num(node.value), _PREC["atom"]
    elif isinstance(node, Var):
        s, prec = node.name, _PREC["atom"]
    elif isinstance(node, Param):
        s, prec = node.name, _PREC["atom"]
    elif isinstance(node, Neg):
        s, prec = "-" + _pretty(node.arg, _PREC["neg"], True), _PREC["neg"]
    elif isinstance(node, Bin):
        prec = _PREC[node.op]
        lhs = _pretty(node.lhs, prec, False)
        rhs = _pretty(node.rhs, prec, True)
        glue = f" {node.op} " if prec == 1 else node.op
        s = f"{lhs}{glue}{rhs}"
    elif isinstance(node, Pow):
        base = _pretty(node.base, _PREC["pow"] + 1, False)
        s, prec = f"{base}^{node.exponent}", _PREC["pow"]
    elif isinstance(node, Func):
        s, prec = f"{node.name}({_pretty(node.arg)})", _PREC["atom"]
    elif isinstance(node, Prim):
        main = ", ".join(_pretty(a) for a in node.main)
        shape = ", ".join(_pretty(a) for a in node.shape)
        s, prec = f"{node.name}({main}; {shape})", _PREC["atom"]
    else:
        raise TypeError(f"unknown node {node!r}")
    if prec < parent_prec or (right and prec == parent_prec):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# public types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldExpr:
    """Parsed expression tree for a scalar field g(t, x)."""

    ast: Node

    @property
    def params(self) -> frozenset[str]:
        return frozenset(n.name for n in _walk(self.ast)
                         if isinstance(n, Param))

    def pretty(self) -> str:
        return _pretty(self.ast)

    def eval(self, t: float, x, env: Mapping[str, float]):
        return _eval_node(self.ast, t, x, env)


def parse(text: str) -> FieldExpr:
    """Parse an expression string into a FieldExpr."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    return FieldExpr(_Parser(text).parse())


@dataclass(frozen=True)
class ScalarField:
    """A field expression together with parameter bindings.

    Evaluation requires every free parameter of the expression to be bound;
    extra bindings are allowed and ignored. Fields are immutable; bind()
    returns a new field.
    """

    expr: FieldExpr
    bindings: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bindings", dict(self.bindings))

    def bind(self, **values: float) -> "ScalarField":
        merged = {**self.bindings, **{k: float(v) for k, v in values.items()}}
        return ScalarField(self.expr, merged)

    @property
    def free_params(self) -> frozenset[str]:
        return self.expr.params - frozenset(self.bindings)

    def _require_bound(self) -> None:
        missing = self.free_params
        if missing:
            raise UnboundParameterError(sorted(missing)[0])

    def eval(self, t: float, x: float) -> float:
        self._require_bound()
        try:
            return float(self.expr.eval(t, x, self.bindings))
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(str(exc), t, x) from exc

    def _hyper(self, t: float, x: float) -> HyperDual:
        self._require_bound()
        try:
            out = self.expr.eval(t, x=HyperDual(float(x), 1.0, 0.0),
                                 env=self.bindings)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(str(exc), t, x) from exc
        return _lift(out)

    def eval_dx(self, t: float, x: float) -> float:
        return self._hyper(t, x).d1

    def eval_dxx(self, t: float, x: float) -> float:
        return self._hyper(t, x).d2

    def pretty(self) -> str:
        return self.expr.pretty()

    @property
    def compiled(self):
        """Compiled closures for the hot paths (cached per AST + bindings)."""
        from . import codegen

        return codegen.compile_field(self)


def parse_field(text: str, **bindings: float) -> ScalarField:
    """Parse and bind in one step."""
    return ScalarField(parse(text), bindings)
