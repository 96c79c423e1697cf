"""Small arithmetic expression language with exact forward-mode derivatives.

Expressions are parsed into an immutable AST and evaluated either in plain
IEEE double arithmetic or in truncated-Taylor (jet) arithmetic that carries
exact partial derivatives up to third order in at most three active
variables.

Grammar (EBNF, also documented in the README):

    expression  = term , { ("+" | "-") , term } ;
    term        = factor , { ("*" | "/") , factor } ;
    factor      = "-" , factor | power ;
    power       = atom , [ "^" , factor ] ;
    atom        = number | name | name , "(" , expression , ")"
                | "(" , expression , ")" ;

"^" binds tightest and is right-associative, then unary minus, then "*" and
"/", then "+" and "-" (left-associative).  Numbers are decimal with an
optional exponent.  The names "pi" and "e" are reserved constants.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import GeodeticaError

__all__ = [
    "Expression",
    "ParseError",
    "UnknownFunctionError",
    "UnboundVariableError",
    "EvalDomainError",
    "Jet",
    "parse",
    "to_string",
    "free_variables",
    "eval_scalar",
    "eval_jet",
    "derivative",
    "substitute",
    "FUNCTIONS",
    "CONSTANTS",
]


class ParseError(GeodeticaError):
    """Syntax error; ``offset`` is the byte offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class UnboundVariableError(GeodeticaError):
    def __init__(self, names):
        names = tuple(names)
        super().__init__("unbound variable(s): " + ", ".join(names))
        self.names = names


class EvalDomainError(GeodeticaError):
    """Evaluation left the domain of a function (log of non-positive, etc.)."""


FUNCTIONS = (
    "sin", "cos", "tan", "asin", "acos", "atan",
    "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs",
)

CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expression:
    """Parsed arithmetic expression; immutable after construction."""

    root: Node

    def __str__(self) -> str:
        return to_string(self)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[a-zA-Z][a-zA-Z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[at]!r}", at)
        if m.end() == m.start() and m.lastgroup is None:
            break
        kind = m.lastgroup
        if kind is None:  # trailing whitespace only
            break
        value = m.group(kind)
        start = m.end() - len(value)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self) -> Node:
        node = self.expression()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", offset)
        return node

    def expression(self) -> Node:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = BinOp(value, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        kind, value, offset = self.advance()
        if kind == "num":
            num = float(value)
            if not math.isfinite(num):
                raise ParseError("number literal out of range", offset)
            return Num(num)
        if kind == "name":
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expression()
                self.expect_op(")")
                return Call(value, arg)
            if value in CONSTANTS:
                return Const(value)
            return Var(value)
        if kind == "op" and value == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {value!r}" if value else
                         "unexpected end of input", offset)


def parse(text: str) -> Expression:
    """Parse ``text`` into an Expression; raises ParseError with the offset."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return Expression(_Parser(text).parse())


def to_string(e: Expression) -> str:
    """Canonical printer: fully parenthesized form that reparses identically."""
    return _print(e.root)


def _print(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var) or isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_print(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_print(node.left)}{node.op}{_print(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({_print(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


def free_variables(e: Expression) -> tuple:
    """Variable names in order of first appearance; constants excluded."""
    seen = []

    def walk(node):
        if isinstance(node, Var):
            if node.name not in seen:
                seen.append(node.name)
        elif isinstance(node, Neg):
            walk(node.arg)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Call):
            walk(node.arg)

    walk(e.root)
    return tuple(seen)


# ---------------------------------------------------------------------------
# Scalar evaluation
# ---------------------------------------------------------------------------

def _as_int_const(node: Node):
    """Integer value of a literal exponent (allowing a leading minus), else None."""
    if isinstance(node, Num) and float(node.value).is_integer():
        return int(node.value)
    if isinstance(node, Neg):
        inner = _as_int_const(node.arg)
        if inner is not None:
            return -inner
    return None


_SCALAR_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "asin": math.asin, "acos": math.acos, "atan": math.atan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs,
}


def eval_scalar(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate with every free variable bound; IEEE double semantics."""
    missing = [v for v in free_variables(e) if v not in bindings]
    if missing:
        raise UnboundVariableError(missing)
    return _eval_scalar(e.root, bindings)


def _eval_scalar(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(env[node.name])
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval_scalar(node.arg, env)
    if isinstance(node, Call):
        x = _eval_scalar(node.arg, env)
        try:
            y = _SCALAR_FUNCS[node.func](x)
        except ValueError as exc:
            raise EvalDomainError(f"{node.func}({x!r}): {exc}") from exc
        except OverflowError as exc:
            raise EvalDomainError(f"{node.func}({x!r}) overflows") from exc
        return y
    if isinstance(node, BinOp):
        a = _eval_scalar(node.left, env)
        if node.op == "^":
            k = _as_int_const(node.right)
            if k is not None:
                return _int_pow_scalar(a, k)
            b = _eval_scalar(node.right, env)
            if float(b).is_integer():
                return _int_pow_scalar(a, int(b))
            if a <= 0.0:
                raise EvalDomainError(
                    f"{a!r} ^ {b!r}: non-integer power of a non-positive base")
            return math.exp(b * math.log(a))
        b = _eval_scalar(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise EvalDomainError("division by zero")
            return a / b
    raise TypeError(f"not an AST node: {node!r}")


def _int_pow_scalar(base: float, k: int) -> float:
    if k < 0:
        if base == 0.0:
            raise EvalDomainError("zero raised to a negative power")
        return 1.0 / _int_pow_scalar(base, -k)
    result = 1.0
    for _ in range(k):
        result *= base
    return result


# ---------------------------------------------------------------------------
# Jet arithmetic (truncated Taylor, order <= 3, <= 3 active variables)
# ---------------------------------------------------------------------------

class Jet:
    """Value with exact partial derivatives up to the requested order.

    ``grad[a]``, ``hess[a][b]``, ``third[a][b][c]`` hold the first, second
    and third partials with respect to the active variables.  Parts above
    the construction order stay identically zero, so restricting a higher
    order jet reproduces the lower order jet bit for bit.
    """

    __slots__ = ("n", "order", "value", "grad", "hess", "third")

    def __init__(self, n, order, value, grad=None, hess=None, third=None):
        self.n = n
        self.order = order
        self.value = float(value)
        rng = range(n)
        self.grad = tuple(grad) if grad is not None else (0.0,) * n
        self.hess = (tuple(tuple(row) for row in hess) if hess is not None
                     else tuple((0.0,) * n for _ in rng))
        self.third = (tuple(tuple(tuple(r) for r in plane) for plane in third)
                      if third is not None
                      else tuple(tuple((0.0,) * n for _ in rng) for _ in rng))

    @classmethod
    def constant(cls, value, n, order):
        return cls(n, order, value)

    @classmethod
    def variable(cls, value, index, n, order):
        grad = tuple(1.0 if a == index else 0.0 for a in range(n))
        return cls(n, order, value, grad)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        n, rng = self.n, range(self.n)
        out = Jet(n, self.order, self.value + other.value,
                  tuple(x + y for x, y in zip(self.grad, other.grad)))
        if self.order >= 2:
            out.hess = tuple(
                tuple(self.hess[a][b] + other.hess[a][b] for b in rng)
                for a in rng)
        if self.order >= 3:
            out.third = tuple(
                tuple(tuple(self.third[a][b][c] + other.third[a][b][c]
                            for c in rng) for b in rng) for a in rng)
        return out

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        n, rng = self.n, range(self.n)
        out = Jet(n, self.order, -self.value,
                  tuple(-x for x in self.grad))
        if self.order >= 2:
            out.hess = tuple(tuple(-self.hess[a][b] for b in rng) for a in rng)
        if self.order >= 3:
            out.third = tuple(
                tuple(tuple(-self.third[a][b][c] for c in rng)
                      for b in rng) for a in rng)
        return out

    def __mul__(self, other):
        n, rng = self.n, range(self.n)
        u0, v0 = self.value, other.value
        ug, vg = self.grad, other.grad
        out = Jet(n, self.order, u0 * v0,
                  tuple(u0 * vg[a] + v0 * ug[a] for a in rng))
        if self.order >= 2:
            uh, vh = self.hess, other.hess
            out.hess = tuple(
                tuple(u0 * vh[a][b] + v0 * uh[a][b]
                      + ug[a] * vg[b] + ug[b] * vg[a] for b in rng)
                for a in rng)
        if self.order >= 3:
            uh, vh = self.hess, other.hess
            ut, vt = self.third, other.third
            out.third = tuple(
                tuple(tuple(
                    u0 * vt[a][b][c] + v0 * ut[a][b][c]
                    + ug[a] * vh[b][c] + ug[b] * vh[a][c] + ug[c] * vh[a][b]
                    + vg[a] * uh[b][c] + vg[b] * uh[a][c] + vg[c] * uh[a][b]
                    for c in rng) for b in rng) for a in rng)
        return out

    def __truediv__(self, other):
        x = other.value
        if x == 0.0:
            raise EvalDomainError("division by zero")
        inv = 1.0 / x
        return self * other.compose(inv, -inv * inv, 2.0 * inv ** 3,
                                    -6.0 * inv ** 4)

    def compose(self, f0, f1, f2=0.0, f3=0.0):
        """Chain rule for a scalar function with derivatives f1, f2, f3 at value."""
        n, rng = self.n, range(self.n)
        g = self.grad
        out = Jet(n, self.order, f0, tuple(f1 * g[a] for a in rng))
        if self.order >= 2:
            h = self.hess
            out.hess = tuple(
                tuple(f1 * h[a][b] + f2 * g[a] * g[b] for b in rng)
                for a in rng)
        if self.order >= 3:
            h, t = self.hess, self.third
            out.third = tuple(
                tuple(tuple(
                    f1 * t[a][b][c]
                    + f2 * (g[a] * h[b][c] + g[b] * h[a][c] + g[c] * h[a][b])
                    + f3 * g[a] * g[b] * g[c]
                    for c in rng) for b in rng) for a in rng)
        return out

    def int_pow(self, k: int) -> "Jet":
        if k < 0:
            if self.value == 0.0:
                raise EvalDomainError("zero raised to a negative power")
            one = Jet.constant(1.0, self.n, self.order)
            return one / self.int_pow(-k)
        result = Jet.constant(1.0, self.n, self.order)
        for _ in range(k):
            result = result * self
        return result


def _jet_call(func: str, u: Jet) -> Jet:
    x = u.value
    needs_derivs = u.order >= 1
    if func == "sin":
        s, c = math.sin(x), math.cos(x)
        return u.compose(s, c, -s, -c)
    if func == "cos":
        s, c = math.sin(x), math.cos(x)
        return u.compose(c, -s, -c, s)
    if func == "tan":
        t = math.tan(x)
        d = 1.0 + t * t
        return u.compose(t, d, 2.0 * t * d, d * (2.0 + 6.0 * t * t))
    if func == "asin" or func == "acos":
        if abs(x) > 1.0 or (needs_derivs and abs(x) == 1.0):
            raise EvalDomainError(f"{func}({x!r}) out of domain")
        w = 1.0 - x * x
        f1 = w ** -0.5
        f2 = x * w ** -1.5
        f3 = (1.0 + 2.0 * x * x) * w ** -2.5
        if func == "asin":
            return u.compose(math.asin(x), f1, f2, f3)
        return u.compose(math.acos(x), -f1, -f2, -f3)
    if func == "atan":
        d = 1.0 / (1.0 + x * x)
        return u.compose(math.atan(x), d, -2.0 * x * d * d,
                         (6.0 * x * x - 2.0) * d ** 3)
    if func == "sinh":
        s, c = math.sinh(x), math.cosh(x)
        return u.compose(s, c, s, c)
    if func == "cosh":
        s, c = math.sinh(x), math.cosh(x)
        return u.compose(c, s, c, s)
    if func == "tanh":
        t = math.tanh(x)
        d = 1.0 - t * t
        return u.compose(t, d, -2.0 * t * d, d * (6.0 * t * t - 2.0))
    if func == "exp":
        ex = math.exp(x)
        return u.compose(ex, ex, ex, ex)
    if func == "log":
        if x <= 0.0:
            raise EvalDomainError(f"log({x!r}) out of domain")
        inv = 1.0 / x
        return u.compose(math.log(x), inv, -inv * inv, 2.0 * inv ** 3)
    if func == "sqrt":
        if x < 0.0 or (needs_derivs and x == 0.0):
            raise EvalDomainError(f"sqrt({x!r}) out of domain")
        r = math.sqrt(x)
        if not needs_derivs:
            return u.compose(r, 0.0)
        return u.compose(r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x))
    if func == "abs":
        if x == 0.0 and needs_derivs:
            raise EvalDomainError("abs is not differentiable at zero")
        return u.compose(abs(x), math.copysign(1.0, x) if x != 0.0 else 0.0)
    raise UnknownFunctionError(f"unknown function {func!r}", 0)


def eval_jet(e: Expression, actives: Sequence[str], point: Sequence[float],
             order: int = 3) -> Jet:
    """Evaluate with exact partials in ``actives`` up to ``order`` (1, 2, or 3)."""
    actives = tuple(actives)
    if len(set(actives)) != len(actives):
        raise ValueError("active variables must be distinct")
    if len(point) != len(actives):
        raise ValueError("point length must match the active variables")
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2, or 3")
    n = len(actives)
    index = {name: i for i, name in enumerate(actives)}
    missing = [v for v in free_variables(e) if v not in index]
    if missing:
        raise UnboundVariableError(missing)
    env = {name: Jet.variable(float(point[i]), i, n, order)
           for name, i in index.items()}
    return _eval_jet(e.root, env, n, order)


def _eval_jet(node: Node, env, n: int, order: int) -> Jet:
    if isinstance(node, Num):
        return Jet.constant(node.value, n, order)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Const):
        return Jet.constant(CONSTANTS[node.name], n, order)
    if isinstance(node, Neg):
        return -_eval_jet(node.arg, env, n, order)
    if isinstance(node, Call):
        return _jet_call(node.func, _eval_jet(node.arg, env, n, order))
    if isinstance(node, BinOp):
        a = _eval_jet(node.left, env, n, order)
        if node.op == "^":
            k = _as_int_const(node.right)
            if k is not None:
                return a.int_pow(k)
            b = _eval_jet(node.right, env, n, order)
            if a.value <= 0.0:
                raise EvalDomainError(
                    "non-integer power requires a positive base")
            return _jet_call("exp", b * _jet_call("log", a))
        b = _eval_jet(node.right, env, n, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Structural helpers
# ---------------------------------------------------------------------------

def substitute(e: Expression, mapping: Mapping[str, object]) -> Expression:
    """Replace variables by numbers or by other Expressions (no rewriting)."""

    def conv(value):
        if isinstance(value, Expression):
            return value.root
        return Num(float(value))

    table = {name: conv(value) for name, value in mapping.items()}

    def walk(node):
        if isinstance(node, Var):
            return table.get(node.name, node)
        if isinstance(node, Neg):
            return Neg(walk(node.arg))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return Call(node.func, walk(node.arg))
        return node

    return Expression(walk(e.root))


def derivative(e: Expression, name: str) -> Expression:
    """Formal derivative with respect to ``name``; no simplification is done."""
    return Expression(_derivative(e.root, name))


_D_TABLE = {
    # derivative of f(u) as a function of the inner node u
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: Neg(Call("sin", u)),
    "tan": lambda u: BinOp("/", Num(1.0), BinOp("^", Call("cos", u), Num(2.0))),
    "asin": lambda u: BinOp("/", Num(1.0), Call("sqrt", BinOp(
        "-", Num(1.0), BinOp("^", u, Num(2.0))))),
    "acos": lambda u: Neg(BinOp("/", Num(1.0), Call("sqrt", BinOp(
        "-", Num(1.0), BinOp("^", u, Num(2.0)))))),
    "atan": lambda u: BinOp("/", Num(1.0), BinOp(
        "+", Num(1.0), BinOp("^", u, Num(2.0)))),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "tanh": lambda u: BinOp("-", Num(1.0), BinOp("^", Call("tanh", u), Num(2.0))),
    "exp": lambda u: Call("exp", u),
    "log": lambda u: BinOp("/", Num(1.0), u),
    "sqrt": lambda u: BinOp("/", Num(1.0), BinOp("*", Num(2.0), Call("sqrt", u))),
    "abs": lambda u: BinOp("/", u, Call("abs", u)),
}


def _derivative(node: Node, name: str) -> Node:
    if isinstance(node, (Num, Const)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == name else 0.0)
    if isinstance(node, Neg):
        return Neg(_derivative(node.arg, name))
    if isinstance(node, Call):
        outer = _D_TABLE[node.func](node.arg)
        return BinOp("*", outer, _derivative(node.arg, name))
    if isinstance(node, BinOp):
        da = _derivative(node.left, name)
        db = _derivative(node.right, name)
        a, b = node.left, node.right
        if node.op == "+":
            return BinOp("+", da, db)
        if node.op == "-":
            return BinOp("-", da, db)
        if node.op == "*":
            return BinOp("+", BinOp("*", da, b), BinOp("*", a, db))
        if node.op == "/":
            return BinOp("/", BinOp("-", BinOp("*", da, b), BinOp("*", a, db)),
                         BinOp("^", b, Num(2.0)))
        if node.op == "^":
            k = _as_int_const(b)
            if k is not None:
                # d/dx u^k = k u^(k-1) u'
                return BinOp("*", BinOp("*", Num(float(k)),
                                        BinOp("^", a, Num(float(k - 1)))), da)
            # u^v = exp(v log u): d = u^v (v' log u + v u'/u)
            return BinOp("*", BinOp("^", a, b), BinOp(
                "+", BinOp("*", db, Call("log", a)),
                BinOp("/", BinOp("*", b, da), a)))
    raise TypeError(f"not an AST node: {node!r}")
