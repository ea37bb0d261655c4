"""Symbolic scalar expressions over chart coordinates.

Expressions are hash-consed: structurally identical trees are the same Python
object, so identity comparison is structural equality and derivative /
evaluation caches can key on the node itself.  Arithmetic through the
operators (``+``, ``*``, ...) and the module-level constructors applies light
algebraic folding as it builds; :func:`parse_expr` builds the raw tree.
"""
from __future__ import annotations

import math
import re
import threading
import weakref
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Expr",
    "ParseError",
    "UnknownIdentifierError",
    "DomainError",
    "Evaluator",
    "const",
    "var",
    "sin",
    "cos",
    "exp",
    "ln",
    "sqrt",
    "parse_expr",
    "differentiate",
    "evaluate",
    "simplify",
    "free_vars",
    "walk",
    "ZERO",
    "ONE",
]

UNARY_OPS = ("neg", "sin", "cos", "exp", "ln", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div")
FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")

Number = Union[int, float]


class ParseError(ValueError):
    """Malformed expression text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r}", position)
        self.name = name


class DomainError(ArithmeticError):
    """Evaluation left the domain of ln, sqrt, division or a power."""

    def __init__(self, message: str, node: "Expr"):
        text = str(node)
        if len(text) > 120:
            text = text[:117] + "..."
        super().__init__(f"{message} in {text}")
        self.node = node


_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class Expr:
    """Immutable expression node.

    ``op`` is one of ``const``, ``var``, the unary ops (``neg sin cos exp ln
    sqrt``), the binary ops (``add sub mul div``) or ``pow``.  ``value``
    holds the constant, the variable name, or the (constant) exponent of a
    ``pow`` node.
    """

    __slots__ = ("op", "value", "args", "__weakref__")

    op: str
    value: object
    args: tuple

    def __new__(cls, *a, **k):  # pragma: no cover - construction goes through _node
        raise TypeError("use const(), var() or parse_expr() to build expressions")

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __reduce__(self):
        return (_rebuild, (self.op, self.value, self.args))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else add(self, other)

    def __radd__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else add(other, self)

    def __sub__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else sub(self, other)

    def __rsub__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else sub(other, self)

    def __mul__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else mul(self, other)

    def __rmul__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else mul(other, self)

    def __truediv__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else div(self, other)

    def __rtruediv__(self, other):
        other = _maybe(other)
        return NotImplemented if other is None else div(other, self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if isinstance(exponent, Expr):
            if exponent.op != "const":
                raise TypeError("exponent must be a constant")
            exponent = exponent.value
        return power(self, exponent)

    # -- inspection -----------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def is_zero(self) -> bool:
        return self.op == "const" and self.value == 0.0

    def __repr__(self) -> str:
        if self.op == "const":
            return f"const({_fmt(self.value)})"
        if self.op == "var":
            return f"var({self.value!r})"
        if self.op == "pow":
            return f"pow({self.args[0]!r}, {_fmt(self.value)})"
        return f"{self.op}({', '.join(repr(a) for a in self.args)})"

    def __str__(self) -> str:
        return _to_text(self)

    def __format__(self, spec: str) -> str:
        return str(self)


def _rebuild(op, value, args):
    return _node(op, value, tuple(args))


def _node(op: str, value, args: tuple) -> Expr:
    key = (op, value, *(id(a) for a in args))
    with _lock:
        node = _table.get(key)
        if node is not None and node.args == args:
            return node
        node = object.__new__(Expr)
        object.__setattr__(node, "op", op)
        object.__setattr__(node, "value", value)
        object.__setattr__(node, "args", args)
        _table[key] = node
        return node


def _maybe(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return const(value)
    return None


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return const(value)
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


def const(value: Number) -> Expr:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"non-finite constant {value!r}")
    return _node("const", v + 0.0, ())


def var(name: str) -> Expr:
    return _node("var", name, ())


ZERO = const(0)
ONE = const(1)


# -- folding constructors ------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value + b.value)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return _node("add", None, (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value - b.value)
    if b.is_zero:
        return a
    if a.is_zero:
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return _node("sub", None, (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value * b.value)
    if a.is_zero or b.is_zero:
        return ZERO
    if a.op == "const":
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return neg(b)
    if b.op == "const":
        if b.value == 1.0:
            return a
        if b.value == -1.0:
            return neg(a)
        a, b = b, a
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    return _node("mul", None, (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if b.op == "const" and b.value != 0.0:
        if a.op == "const":
            return const(a.value / b.value)
        if b.value == 1.0:
            return a
        if b.value == -1.0:
            return neg(a)
    if a.is_zero:
        return ZERO
    return _node("div", None, (a, b))


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    if a.op == "sub":
        return _node("sub", None, (a.args[1], a.args[0]))
    return _node("neg", None, (a,))


def power(base: Expr, exponent: Number) -> Expr:
    e = float(exponent)
    if not math.isfinite(e):
        raise ValueError("non-finite exponent")
    if e == 0.0:
        return ONE
    if e == 1.0:
        return base
    if base.op == "const":
        b = base.value
        if b > 0 or (float(e).is_integer() and (b != 0 or e > 0)):
            return const(b ** e)
    return _node("pow", e + 0.0, (base,))


def _unary(op: str, a: Expr) -> Expr:
    if a.op == "const":
        v = a.value
        if op == "sin":
            return const(math.sin(v))
        if op == "cos":
            return const(math.cos(v))
        if op == "exp":
            return const(math.exp(v))
        if op == "ln" and v > 0:
            return const(math.log(v))
        if op == "sqrt" and v >= 0:
            return const(math.sqrt(v))
    return _node(op, None, (a,))


def sin(a) -> Expr:
    return _unary("sin", _coerce(a))


def cos(a) -> Expr:
    return _unary("cos", _coerce(a))


def exp(a) -> Expr:
    return _unary("exp", _coerce(a))


def ln(a) -> Expr:
    return _unary("ln", _coerce(a))


def sqrt(a) -> Expr:
    return _unary("sqrt", _coerce(a))


_BUILD = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
}


def _rebuild_folded(node: Expr, args: tuple) -> Expr:
    op = node.op
    if op in _BUILD:
        return _BUILD[op](*args)
    if op == "neg":
        return neg(args[0])
    if op == "pow":
        return power(args[0], node.value)
    if op in FUNCTIONS:
        return _unary(op, args[0])
    return node


# -- traversal -----------------------------------------------------------

def walk(root: Expr) -> Iterator[Expr]:
    """Yield every distinct node of the DAG below ``root``, children first."""
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.args):
            if id(child) not in seen:
                stack.append((child, False))


def free_vars(e: Expr) -> set[str]:
    return {n.value for n in walk(e) if n.op == "var"}


def simplify(e: Expr) -> Expr:
    """Constant folding and 0/1 identities, bottom-up; never loops."""
    out: dict[int, Expr] = {}
    for node in walk(e):
        if not node.args:
            out[id(node)] = node
            continue
        out[id(node)] = _rebuild_folded(node, tuple(out[id(a)] for a in node.args))
    return out[id(e)]


# -- differentiation -----------------------------------------------------

_dcache: dict[str, "weakref.WeakKeyDictionary[Expr, Expr]"] = {}
_dlock = threading.Lock()


def _d_local(node: Expr, name: str, dargs: Sequence[Expr]) -> Expr:
    op = node.op
    if op == "const":
        return ZERO
    if op == "var":
        return ONE if node.value == name else ZERO
    if op == "add":
        return add(dargs[0], dargs[1])
    if op == "sub":
        return sub(dargs[0], dargs[1])
    if op == "neg":
        return neg(dargs[0])
    a = node.args[0]
    da = dargs[0]
    if op == "mul":
        b = node.args[1]
        return add(mul(da, b), mul(a, dargs[1]))
    if op == "div":
        b = node.args[1]
        db = dargs[1]
        if db.is_zero:
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if da.is_zero:
        return ZERO
    if op == "pow":
        c = node.value
        return mul(mul(const(c), power(a, c - 1.0)), da)
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    if op == "exp":
        return mul(node, da)
    if op == "ln":
        return div(da, a)
    if op == "sqrt":
        return div(da, mul(const(2), node))
    raise ValueError(f"unknown op {op}")


def differentiate(e: Expr, coord: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``coord``."""
    with _dlock:
        cache = _dcache.setdefault(coord, weakref.WeakKeyDictionary())
    hit = cache.get(e)
    if hit is not None:
        return hit
    for node in walk(e):
        if node in cache:
            continue
        dargs = [cache[a] for a in node.args]
        cache[node] = _d_local(node, coord, dargs)
    return cache[e]


# -- evaluation ----------------------------------------------------------

class Evaluator:
    """Evaluates expressions on a batch of points with a shared node cache.

    ``env`` maps coordinate names to equal-length 1-d arrays (or scalars).
    Results of :meth:`eval` are arrays broadcast to the batch length.
    """

    def __init__(self, env: Mapping[str, object]):
        arrays = {k: np.asarray(v, dtype=float) for k, v in env.items()}
        sizes = {a.shape for a in arrays.values() if a.ndim}
        if len(sizes) > 1:
            raise ValueError("coordinate arrays must share one shape")
        self.shape = sizes.pop() if sizes else ()
        self.env = arrays
        self._memo: dict[int, tuple[Expr, object]] = {}

    def _value(self, node: Expr):
        hit = self._memo.get(id(node))
        if hit is not None:
            return hit[1]
        for n in walk(node):
            if id(n) in self._memo:
                continue
            vals = [self._memo[id(a)][1] for a in n.args]
            self._memo[id(n)] = (n, self._compute(n, vals))
        return self._memo[id(node)][1]

    def _compute(self, n: Expr, vals: list):
        op = n.op
        if op == "const":
            return n.value
        if op == "var":
            try:
                return self.env[n.value]
            except KeyError:
                raise KeyError(f"no value for coordinate {n.value!r}") from None
        if op == "add":
            return vals[0] + vals[1]
        if op == "sub":
            return vals[0] - vals[1]
        if op == "mul":
            return vals[0] * vals[1]
        if op == "neg":
            return -vals[0]
        if op == "div":
            den = vals[1]
            if np.any(np.asarray(den) == 0.0):
                raise DomainError("division by zero", n)
            return vals[0] / den
        x = vals[0]
        if op == "pow":
            c = n.value
            xa = np.asarray(x)
            if c < 0 and np.any(xa == 0.0):
                raise DomainError("zero raised to a negative power", n)
            if not float(c).is_integer() and np.any(xa < 0.0):
                raise DomainError("negative base with fractional exponent", n)
            if float(c).is_integer() and abs(c) <= 64:
                return np.power(x, int(c)) if c > 0 else 1.0 / np.power(x, int(-c))
            return np.power(x, c)
        if op == "sin":
            return np.sin(x)
        if op == "cos":
            return np.cos(x)
        if op == "exp":
            return np.exp(x)
        if op == "ln":
            if np.any(np.asarray(x) <= 0.0):
                raise DomainError("ln of a non-positive value", n)
            return np.log(x)
        if op == "sqrt":
            if np.any(np.asarray(x) < 0.0):
                raise DomainError("sqrt of a negative value", n)
            return np.sqrt(x)
        raise ValueError(f"unknown op {op}")

    def eval(self, e: Expr) -> np.ndarray:
        with np.errstate(all="ignore"):
            v = self._value(e)
        return np.broadcast_to(np.asarray(v, dtype=float), self.shape)

    def eval_many(self, exprs: np.ndarray) -> np.ndarray:
        """Evaluate an object array of expressions; batch axis goes first."""
        exprs = np.asarray(exprs, dtype=object)
        out = np.empty(self.shape + exprs.shape, dtype=float)
        for idx in np.ndindex(*exprs.shape):
            out[(...,) + idx] = self.eval(exprs[idx])
        return out


def evaluate(e: Expr, p: Mapping[str, float]) -> float:
    """Value of ``e`` at the point ``p`` (a coordinate-name -> value map)."""
    missing = free_vars(e) - set(p)
    if missing:
        raise KeyError(f"point lacks coordinates {sorted(missing)}")
    return float(Evaluator(p).eval(e))


# -- printing ------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _fmt(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _to_text(root: Expr) -> str:
    text: dict[int, tuple[str, int]] = {}
    for n in walk(root):
        op = n.op
        if op == "const":
            s = _fmt(n.value)
            text[id(n)] = (s, 3 if n.value < 0 else 5)
        elif op == "var":
            text[id(n)] = (n.value, 5)
        elif op in FUNCTIONS:
            text[id(n)] = (f"{op}({text[id(n.args[0])][0]})", 5)
        elif op == "neg":
            s, p = text[id(n.args[0])]
            text[id(n)] = ("-" + (s if p > 3 else f"({s})"), 3)
        elif op == "pow":
            s, p = text[id(n.args[0])]
            base = s if p > 4 else f"({s})"
            c = _fmt(n.value)
            text[id(n)] = (f"{base}^{c if n.value >= 0 else '(' + c + ')'}", 4)
        else:
            prec = _PREC[op]
            ls, lp = text[id(n.args[0])]
            rs, rp = text[id(n.args[1])]
            left = ls if lp >= prec else f"({ls})"
            # non-commutative ops and equal precedence on the right need parens
            right = rs if rp > prec or (rp == prec and op in ("add", "mul")) else f"({rs})"
            sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
            text[id(n)] = (f"{left}{sym}{right}", prec)
    return text[id(root)][0]


# -- parsing -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Iterable[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = set(coords)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, sym, _ = self.take()
            right = self.term()
            left = _node("add" if sym == "+" else "sub", None, (left, right))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, sym, _ = self.take()
            right = self.unary()
            left = _node("mul" if sym == "*" else "div", None, (left, right))
        return left

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return _node("neg", None, (self.unary(),))
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            _, _, pos = self.take()
            exponent = self.exponent(pos)
            return _node("pow", exponent + 0.0, (base,))
        return base

    def exponent(self, pos: int) -> float:
        start = self.peek()[2]
        sign = 1.0
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            if self.take()[1] == "-":
                sign = -sign
        e = self.power()
        folded = simplify(e)
        if folded.op != "const":
            raise ParseError("exponent must be a constant", start)
        return sign * folded.value

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return const(float(val))
        if kind == "id":
            if val in FUNCTIONS and (self.peek()[1] == "(" and self.peek()[0] == "op"):
                self.take()
                arg = self.expr()
                self.expect(")")
                return _node(val, None, (arg,))
            if val in FUNCTIONS:
                raise ParseError(f"function {val!r} needs an argument", pos)
            if val not in self.coords:
                raise UnknownIdentifierError(val, pos)
            return var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse_expr(text: str, coords: Iterable[str]) -> Expr:
    """Parse ``text`` into an expression over the coordinate names ``coords``.

    >>> str(parse_expr("x^2*y", ["x", "y"]))
    'x^2*y'
    """
    return _Parser(text, coords).parse()
