"""Small symbolic expression engine over chart coordinates.

Expressions are hash-consed trees: structurally equal nodes are the same
object, so identity comparison and memoised derivatives are cheap.  Two
evaluators are provided, a scalar recursive one built on :mod:`math` and a
vectorised one built on numpy; they are written independently so that each
can serve as an oracle for the other.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Number = Union[int, Fraction]

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")
TINY = 1e-300


class ParseError(ValueError):
    """Syntax error with the byte offset of the offending token."""

    def __init__(self, text: str, offset: int, expected: Iterable[str], found: str):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"parse error at offset {offset}: expected one of {{{exp}}}, found {found!r}")


class DomainError(ArithmeticError):
    """A singular operation was met while evaluating ``subexpr``."""

    def __init__(self, message: str, subexpr: "Expr | None" = None, point: Mapping[str, float] | None = None):
        self.subexpr = subexpr
        self.point = dict(point) if point is not None else None
        where = f" in {to_text(subexpr)}" if subexpr is not None else ""
        super().__init__(message + where)


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

_interned: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    __slots__ = ("_key", "_hash", "__weakref__")

    def __new__(cls, *fields):
        key = (cls,) + fields
        node = _interned.get(key)
        if node is None:
            node = object.__new__(cls)
            node._key = key
            node._hash = hash(key)
            _interned[key] = node
        return node

    def __hash__(self) -> int:
        return self._hash

    def __reduce__(self):
        return (type(self), self._key[1:])

    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    # arithmetic builds simplified nodes
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return power(self, n)

    def __str__(self) -> str:
        return to_text(self)


class Num(Expr):
    __slots__ = ()

    def __new__(cls, value):
        return Expr.__new__(cls, Fraction(value))

    @property
    def value(self) -> Fraction:
        return self._key[1]

    def __repr__(self) -> str:
        return str(self.value)


class Var(Expr):
    __slots__ = ()

    def __new__(cls, name: str):
        return Expr.__new__(cls, str(name))

    @property
    def name(self) -> str:
        return self._key[1]

    def __repr__(self) -> str:
        return self.name


class Neg(Expr):
    __slots__ = ()

    def __new__(cls, arg: Expr):
        return Expr.__new__(cls, arg)

    @property
    def arg(self) -> Expr:
        return self._key[1]

    @property
    def children(self):
        return (self._key[1],)

    def __repr__(self) -> str:
        return f"Neg({self.arg!r})"


class _Binary(Expr):
    __slots__ = ()

    def __new__(cls, left: Expr, right: Expr):
        return Expr.__new__(cls, left, right)

    @property
    def left(self) -> Expr:
        return self._key[1]

    @property
    def right(self) -> Expr:
        return self._key[2]

    @property
    def children(self):
        return self._key[1:3]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Pow(Expr):
    """Integer power."""

    __slots__ = ()

    def __new__(cls, base: Expr, exponent: int):
        return Expr.__new__(cls, base, int(exponent))

    @property
    def base(self) -> Expr:
        return self._key[1]

    @property
    def exponent(self) -> int:
        return self._key[2]

    @property
    def children(self):
        return (self._key[1],)

    def __repr__(self) -> str:
        return f"Pow({self.base!r}, {self.exponent})"


class Func(Expr):
    __slots__ = ()

    def __new__(cls, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        return Expr.__new__(cls, name, arg)

    @property
    def name(self) -> str:
        return self._key[1]

    @property
    def arg(self) -> Expr:
        return self._key[2]

    @property
    def children(self):
        return (self._key[2],)

    def __repr__(self) -> str:
        return f"{self.name}({self.arg!r})"


ZERO = Num(0)
ONE = Num(1)


# ---------------------------------------------------------------------------
# simplifying constructors
# ---------------------------------------------------------------------------


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Num(x)
    if isinstance(x, float):
        return Num(Fraction(x))
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _num(e: Expr) -> Fraction | None:
    return e.value if isinstance(e, Num) else None


def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None:
        return Num(va + vb)
    if va == 0:
        return b
    if vb == 0:
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None:
        return Num(va - vb)
    if a is b:
        return ZERO
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def mul(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None:
        return Num(va * vb)
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.arg, b.arg)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    if vb is not None:
        a, b = b, a
    return Mul(a, b)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    va, vb = _num(a), _num(b)
    if vb == 0:
        raise ZeroDivisionError("division by literal zero")
    if va is not None and vb is not None:
        return Num(va / vb)
    if va == 0:
        return ZERO
    if vb == 1:
        return a
    if vb is not None:
        return mul(Num(1 / vb), a)
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    if isinstance(b, Neg):
        return neg(div(a, b.arg))
    return Div(a, b)


def neg(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a, n: int) -> Expr:
    a = as_expr(a)
    if int(n) != n:
        raise ValueError("only integer powers are supported")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    va = _num(a)
    if va is not None and (va != 0 or n > 0):
        return Num(va**n)
    if isinstance(a, Pow):
        return power(a.base, a.exponent * n)
    if isinstance(a, Neg):
        inner = power(a.arg, n)
        return inner if n % 2 == 0 else neg(inner)
    return Pow(a, n)


def func(name: str, a) -> Expr:
    a = as_expr(a)
    va = _num(a)
    if va == 0:
        if name in ("exp", "cos"):
            return ONE
        if name in ("sin", "sqrt"):
            return ZERO
    if va == 1 and name in ("log", "sqrt"):
        return ZERO if name == "log" else ONE
    return Func(name, a)


def exp(a) -> Expr:
    return func("exp", a)


def log(a) -> Expr:
    return func("log", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def var(name: str) -> Expr:
    return Var(name)


def total(terms: Iterable) -> Expr:
    acc: Expr = ZERO
    for t in terms:
        acc = add(acc, t)
    return acc


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8192)
def postorder(root: Expr) -> tuple[Expr, ...]:
    """All distinct subterms of ``root``, children before parents."""
    seen: set[int] = set()
    order: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.children):
            if id(child) not in seen:
                stack.append((child, False))
    return tuple(order)


@lru_cache(maxsize=65536)
def free_vars(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in postorder(e) if isinstance(n, Var))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, rebuilding with simplification."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    memo: dict[int, Expr] = {}
    for node in postorder(e):
        memo[id(node)] = _rebuild(node, memo, mapping)
    return memo[id(e)]


def _rebuild(node: Expr, memo, mapping) -> Expr:
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    kids = [memo[id(c)] for c in node.children]
    if isinstance(node, Neg):
        return neg(kids[0])
    if isinstance(node, Add):
        return add(*kids)
    if isinstance(node, Sub):
        return sub(*kids)
    if isinstance(node, Mul):
        return mul(*kids)
    if isinstance(node, Div):
        return div(*kids)
    if isinstance(node, Pow):
        return power(kids[0], node.exponent)
    if isinstance(node, Func):
        return func(node.name, kids[0])
    raise TypeError(type(node))


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------


def differentiate(e, variable: str) -> Expr:
    """Exact derivative of ``e`` with respect to ``variable``."""
    e = as_expr(e)
    if variable not in free_vars(e):
        return ZERO
    return _diff(e, variable)


@lru_cache(maxsize=1 << 18)
def _diff(e: Expr, x: str) -> Expr:
    if x not in free_vars(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return neg(_diff(e.arg, x))
    if isinstance(e, Add):
        return add(_diff(e.left, x), _diff(e.right, x))
    if isinstance(e, Sub):
        return sub(_diff(e.left, x), _diff(e.right, x))
    if isinstance(e, Mul):
        a, b = e.left, e.right
        return add(mul(_diff(a, x), b), mul(a, _diff(b, x)))
    if isinstance(e, Div):
        a, b = e.left, e.right
        da, db = _diff(a, x), _diff(b, x)
        if db is ZERO:
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(e, Pow):
        n = e.exponent
        return mul(mul(Num(n), power(e.base, n - 1)), _diff(e.base, x))
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u, x)
        outer = {
            "exp": lambda: e,
            "log": lambda: div(ONE, u),
            "sqrt": lambda: div(ONE, mul(2, e)),
            "sin": lambda: cos(u),
            "cos": lambda: neg(sin(u)),
        }[e.name]()
        return mul(outer, du)
    raise TypeError(type(e))


def gradient(e, coords: Sequence[str]) -> tuple[Expr, ...]:
    return tuple(differentiate(e, c) for c in coords)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    raw = text.encode("utf-8")
    # byte offsets are tracked on the encoded form
    while i < len(raw):
        ch = chr(raw[i])
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < len(raw) and chr(raw[i + 1]).isdigit()):
            j = i
            while j < len(raw) and chr(raw[j]).isdigit():
                j += 1
            if j < len(raw) and chr(raw[j]) == ".":
                j += 1
                while j < len(raw) and chr(raw[j]).isdigit():
                    j += 1
            tokens.append(_Token("num", raw[i:j].decode(), i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(raw) and (chr(raw[j]).isalnum() or chr(raw[j]) == "_"):
                j += 1
            tokens.append(_Token("ident", raw[i:j].decode(), i))
            i = j
        elif ch in "+-*/^()":
            tokens.append(_Token("op", ch, i))
            i += 1
        else:
            raise ParseError(text, i, ["number", "identifier", "(", "-"], raw[i:i + 1].decode(errors="replace"))
    tokens.append(_Token("end", "", len(raw)))
    return tokens


_ATOM_START = ("number", "identifier", "(", "-")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected) -> None:
        tok = self.peek()
        found = tok.text if tok.kind != "end" else "end of input"
        raise ParseError(self.text, tok.offset, expected, found)

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            self.take()
        else:
            self.fail([op])

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(["+", "-", "*", "/", "^", "end of input"])
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "(":
            self.take()
            n = self._signed_int()
            self.expect_op(")")
            return n
        return self._signed_int()

    def _signed_int(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            sign = -1
        tok = self.peek()
        if tok.kind != "num" or not tok.text.isdigit():
            self.fail(["integer"] if sign < 0 else ["integer", "-", "("])
        self.take()
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return Num(Fraction(tok.text))
        if tok.kind == "ident":
            self.take()
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Func(tok.text, arg)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail(_ATOM_START)
        raise AssertionError  # unreachable


def parse(text: str) -> Expr:
    """Parse the textual grammar into an unsimplified tree."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Num):
        v = e.value
        if v < 0:
            return _PREC_NEG
        if v.denominator != 1:
            return _PREC_MUL
    return _PREC_ATOM


def to_text(e: Expr) -> str:
    """Render ``e`` in the input grammar; the output parses back."""
    memo: dict[int, str] = {}
    for node in postorder(e):
        memo[id(node)] = _render(node, memo)
    return memo[id(e)]


def _wrap(child: Expr, memo, needs: bool) -> str:
    s = memo[id(child)]
    return f"({s})" if needs else s


def _render(e: Expr, memo) -> str:
    if isinstance(e, Num):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({memo[id(e.arg)]})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, memo, _prec(e.arg) < _PREC_NEG)
    if isinstance(e, Pow):
        return _wrap(e.base, memo, _prec(e.base) < _PREC_ATOM) + f"^{e.exponent}"
    if isinstance(e, (Add, Sub)):
        op = " + " if isinstance(e, Add) else " - "
        return _wrap(e.left, memo, _prec(e.left) < _PREC_ADD) + op + _wrap(e.right, memo, _prec(e.right) <= _PREC_ADD)
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        return _wrap(e.left, memo, _prec(e.left) < _PREC_MUL) + op + _wrap(e.right, memo, _prec(e.right) <= _PREC_MUL)
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# scalar evaluation (reference evaluator)
# ---------------------------------------------------------------------------


def evaluate(e, point: Mapping[str, float]) -> float:
    """Evaluate at one point in IEEE double precision."""
    e = as_expr(e)
    cache: dict[int, float] = {}
    for node in postorder(e):
        cache[id(node)] = _eval_scalar(node, cache, point)
    return cache[id(e)]


def _eval_scalar(e: Expr, cache, point) -> float:
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(point[e.name])
        except KeyError:
            raise DomainError(f"unbound variable {e.name!r}", e, point) from None
    if isinstance(e, Func):
        x = cache[id(e.arg)]
        if e.name == "log":
            if not x > 0:
                raise DomainError(f"log of non-positive value {x!r}", e, point)
            return math.log(x)
        if e.name == "sqrt":
            if x < 0:
                raise DomainError(f"sqrt of negative value {x!r}", e, point)
            return math.sqrt(x)
        if e.name == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise DomainError("exp overflow", e, point) from None
        return math.sin(x) if e.name == "sin" else math.cos(x)
    if isinstance(e, Neg):
        return -cache[id(e.arg)]
    if isinstance(e, Pow):
        b = cache[id(e.base)]
        if e.exponent < 0 and abs(b) < TINY:
            raise DomainError("negative power of zero", e, point)
        return b ** e.exponent
    a, b = cache[id(e.left)], cache[id(e.right)]
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    if abs(b) < TINY:
        raise DomainError("division by a value below 1e-300", e, point)
    return a / b


# ---------------------------------------------------------------------------
# vectorised evaluation
# ---------------------------------------------------------------------------


def _first_bad(mask: np.ndarray, env: Mapping[str, np.ndarray]) -> dict[str, float]:
    idx = int(np.flatnonzero(mask)[0])
    return {k: float(np.broadcast_to(v, mask.shape)[idx]) for k, v in env.items()}


def evaluate_batch(
    exprs: Sequence[Expr],
    env: Mapping[str, np.ndarray],
    with_scale: bool = False,
):
    """Evaluate several expressions on arrays of points.

    Returns a list of arrays; if ``with_scale`` is set, also a list with the
    pointwise maximum absolute value over each expression's subterms.
    """
    exprs = [as_expr(e) for e in exprs]
    size = max((np.size(v) for v in env.values()), default=1)
    shape = (size,)
    values: dict[int, np.ndarray] = {}
    with np.errstate(all="ignore"):
        for root in exprs:
            for node in postorder(root):
                if id(node) not in values:
                    values[id(node)] = _eval_array(node, values, env, shape)
    results = [np.broadcast_to(values[id(e)], shape).astype(float) for e in exprs]
    if not with_scale:
        return results
    scales = []
    for root in exprs:
        s = np.zeros(shape)
        for node in postorder(root):
            np.maximum(s, np.abs(values[id(node)]), out=s)
        scales.append(s)
    return results, scales


def _eval_array(e: Expr, values, env, shape) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(shape, float(e.value))
    if isinstance(e, Var):
        if e.name not in env:
            raise DomainError(f"unbound variable {e.name!r}", e)
        return np.broadcast_to(np.asarray(env[e.name], dtype=float), shape)
    if isinstance(e, Func):
        x = values[id(e.arg)]
        if e.name == "log":
            bad = ~(x > 0)
            if bad.any():
                raise DomainError("log of non-positive value", e, _first_bad(bad, env))
            return np.log(x)
        if e.name == "sqrt":
            bad = x < 0
            if bad.any():
                raise DomainError("sqrt of negative value", e, _first_bad(bad, env))
            return np.sqrt(x)
        if e.name == "exp":
            out = np.exp(x)
            bad = ~np.isfinite(out) & np.isfinite(x)
            if bad.any():
                raise DomainError("exp overflow", e, _first_bad(bad, env))
            return out
        return np.sin(x) if e.name == "sin" else np.cos(x)
    if isinstance(e, Neg):
        return -values[id(e.arg)]
    if isinstance(e, Pow):
        b = values[id(e.base)]
        if e.exponent < 0:
            bad = np.abs(b) < TINY
            if bad.any():
                raise DomainError("negative power of zero", e, _first_bad(bad, env))
            return 1.0 / b ** (-e.exponent)
        return b ** e.exponent
    a, b = values[id(e.left)], values[id(e.right)]
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    bad = np.abs(b) < TINY
    if bad.any():
        raise DomainError("division by a value below 1e-300", e, _first_bad(bad, env))
    return a / b


# ---------------------------------------------------------------------------
# charts and zero testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """Coordinate names, a sampling box and an optional positivity predicate.

    ``params`` binds additional identifiers (constants) used by expressions.
    """

    coords: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    predicate: Expr | None = None
    params: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        if isinstance(self.params, Mapping):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        if len(self.coords) != len(self.box):
            raise ValueError("box must give one interval per coordinate")
        if not self.coords:
            raise ValueError("chart needs at least one coordinate")
        for lo, hi in self.box:
            if not lo <= hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("duplicate coordinate names")

    @property
    def param_values(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(self.coords) | frozenset(self.param_values)

    def sample(self, n: int, seed: int = 0) -> dict[str, np.ndarray]:
        """``n`` uniform points inside the box satisfying the predicate."""
        if n < 1:
            raise ValueError("n must be positive")
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        kept: list[np.ndarray] = []
        have, attempts = 0, 0
        while have < n:
            if attempts >= 100 * n:
                raise DomainError(f"could not find {n} in-domain points after {attempts} attempts", self.predicate)
            batch = min(max(n - have, 16), 100 * n - attempts)
            pts = lo + (hi - lo) * rng.random((batch, len(self.coords)))
            attempts += batch
            if self.predicate is not None:
                env = self._env(pts)
                with np.errstate(all="ignore"):
                    try:
                        (value,) = evaluate_batch([self.predicate], env)
                    except DomainError:
                        value = _safe_predicate(self.predicate, env, batch)
                pts = pts[np.isfinite(value) & (value > 0)]
            kept.append(pts)
            have += len(pts)
        return self._env(np.concatenate(kept)[:n])

    def _env(self, pts: np.ndarray) -> dict[str, np.ndarray]:
        env = {c: pts[:, i] for i, c in enumerate(self.coords)}
        for k, v in self.params:
            env[k] = np.full(len(pts), float(v))
        return env


def _safe_predicate(pred: Expr, env, batch: int) -> np.ndarray:
    out = np.full(batch, np.nan)
    for i in range(batch):
        try:
            out[i] = evaluate(pred, {k: float(v[i]) for k, v in env.items()})
        except DomainError:
            pass
    return out


@dataclass(frozen=True)
class ZeroTest:
    """Outcome of a sampled zero test."""

    passed: bool
    max_abs: float
    max_ratio: float  # max of |e| / (1 + scale)
    n_points: int
    seed: int


def zero_test(
    exprs: Sequence[Expr] | Expr,
    chart: Chart,
    n_points: int = 100,
    tol: float = 1e-8,
    seed: int = 0,
) -> ZeroTest:
    """Test that every expression vanishes at sampled points of ``chart``."""
    if isinstance(exprs, Expr):
        exprs = [exprs]
    exprs = [as_expr(e) for e in exprs]
    unknown = set().union(*(free_vars(e) for e in exprs)) - chart.symbols if exprs else set()
    if unknown:
        raise DomainError(f"unbound variables {sorted(unknown)}")
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    env = chart.sample(n_points, seed)
    nontrivial = [e for e in exprs if e is not ZERO]
    if not nontrivial:
        return ZeroTest(True, 0.0, 0.0, n_points, seed)
    values, scales = evaluate_batch(nontrivial, env, with_scale=True)
    max_abs, max_ratio = 0.0, 0.0
    for v, s in zip(values, scales):
        a = np.abs(v)
        if not np.all(np.isfinite(a)):
            raise DomainError("non-finite value during zero test", None)
        max_abs = max(max_abs, float(a.max()))
        max_ratio = max(max_ratio, float((a / (1.0 + s)).max()))
    return ZeroTest(max_ratio <= tol, max_abs, max_ratio, n_points, seed)


def is_zero(e, chart: Chart, n_points: int = 100, tol: float = 1e-8, seed: int = 0) -> bool:
    """Probabilistic identity test: ``|e(p)| <= tol * (1 + scale(p))``."""
    return zero_test([as_expr(e)], chart, n_points, tol, seed).passed
