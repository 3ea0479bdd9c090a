"""Expression trees for periodic coefficient functions.

Supported node kinds: real constants, the time variable t, negation, sums,
products, powers with rational exponents, sine, cosine and the exponential.
The text grammar accepts infix + - * / ^, the functions sin/cos/exp, the
variable t, the constant pi and numeric literals.  Division lowers to a
power with exponent -1 and subtraction to an added negation, so the node
set above is closed under parsing and differentiation.

Rational exponents are stored as fractions.Fraction (integer pairs) rather
than floats: exponent arithmetic in the calling code stays drift-free and
the integer/fractional distinction drives the domain rule for powers
(a fractional power demands a strictly positive base).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadrature import golden_min, integrate_adaptive

__all__ = [
    "ExpressionError",
    "EvalDomainError",
    "ParseError",
    "PeriodicityError",
    "Expr",
    "Const",
    "TimeVar",
    "Neg",
    "Add",
    "Mul",
    "Pow",
    "Sin",
    "Cos",
    "Exp",
    "evaluate",
    "derivative",
    "contains_time",
    "parse_expression",
    "Extrema",
    "PeriodicCoeff",
]


class ExpressionError(ValueError):
    pass


class EvalDomainError(ExpressionError):
    """Evaluation left a node's domain (fractional power of a non-positive base)."""


class ParseError(ExpressionError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (column {position + 1})")
        self.position = position


class PeriodicityError(ExpressionError):
    """A coefficient failed the period check on the verification grid."""


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return _add(self, _as_expr(other))

    def __radd__(self, other):
        return _add(_as_expr(other), self)

    def __sub__(self, other):
        return _add(self, _neg(_as_expr(other)))

    def __rsub__(self, other):
        return _add(_as_expr(other), _neg(self))

    def __mul__(self, other):
        return _mul(self, _as_expr(other))

    def __rmul__(self, other):
        return _mul(_as_expr(other), self)

    def __neg__(self):
        return _neg(self)

    def __call__(self, t):
        return evaluate(self, t)


@dataclass(frozen=True)
class Const(Expr):
    value: float
    # exact rational value when known (literals, folded literal arithmetic);
    # consulted only when a parsed exponent must be certified rational
    exact: Fraction | None = None


@dataclass(frozen=True)
class TimeVar(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        fx = float(x)
        exact = Fraction(x) if isinstance(x, int) else None
        return Const(fx, exact)
    raise TypeError(f"cannot treat {x!r} as an expression")


# folding constructors; they keep derivative trees small without doing any
# general rewriting
def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        exact = a.exact + b.exact if a.exact is not None and b.exact is not None else None
        return Const(a.value + b.value, exact)
    return Add(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const):
        if a.value == 0.0:
            return Const(0.0, Fraction(0))
        if a.value == 1.0:
            return b
        if isinstance(b, Const):
            exact = a.exact * b.exact if a.exact is not None and b.exact is not None else None
            return Const(a.value * b.value, exact)
    if isinstance(b, Const) and not isinstance(a, Const):
        return _mul(b, a)
    return Mul(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value, -a.exact if a.exact is not None else None)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _pow(base: Expr, exponent: Fraction) -> Expr:
    if exponent == 0:
        return Const(1.0, Fraction(1))
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value > 0.0 or exponent.denominator == 1:
            if base.exact is not None and exponent.denominator == 1:
                exact = base.exact ** exponent.numerator if base.exact != 0 or exponent > 0 else None
                if exact is not None:
                    return Const(float(exact), exact)
            try:
                return Const(math.pow(base.value, float(exponent)))
            except (ValueError, OverflowError):
                pass
    return Pow(base, exponent)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(expr: Expr, t):
    """Evaluate expr at a scalar t or elementwise at a numpy array."""
    vectorised = isinstance(t, np.ndarray)
    result = _ev(expr, t, vectorised)
    if vectorised and np.ndim(result) == 0:
        return np.full(t.shape, float(result))
    return result


def _ev(e: Expr, t, vec: bool):
    kind = type(e)
    if kind is Const:
        return e.value
    if kind is TimeVar:
        return t
    if kind is Neg:
        return -_ev(e.arg, t, vec)
    if kind is Add:
        return _ev(e.left, t, vec) + _ev(e.right, t, vec)
    if kind is Mul:
        return _ev(e.left, t, vec) * _ev(e.right, t, vec)
    if kind is Pow:
        base = _ev(e.base, t, vec)
        q = e.exponent
        if q.denominator != 1:
            bad = np.any(np.asarray(base) <= 0.0) if vec else base <= 0.0
            if bad:
                raise EvalDomainError(
                    f"fractional power {q} of a non-positive base")
            return base ** float(q)
        if q < 0:
            bad = np.any(np.asarray(base) == 0.0) if vec else base == 0.0
            if bad:
                raise EvalDomainError(f"zero base raised to power {q}")
        return base ** float(q)
    if kind is Sin:
        v = _ev(e.arg, t, vec)
        return np.sin(v) if vec else math.sin(v)
    if kind is Cos:
        v = _ev(e.arg, t, vec)
        return np.cos(v) if vec else math.cos(v)
    if kind is Exp:
        v = _ev(e.arg, t, vec)
        return np.exp(v) if vec else math.exp(v)
    raise TypeError(f"unknown node {e!r}")


def contains_time(e: Expr) -> bool:
    kind = type(e)
    if kind is TimeVar:
        return True
    if kind is Const:
        return False
    if kind in (Neg, Sin, Cos, Exp):
        return contains_time(e.arg)
    if kind in (Add, Mul):
        return contains_time(e.left) or contains_time(e.right)
    if kind is Pow:
        return contains_time(e.base)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# differentiation


def derivative(e: Expr) -> Expr:
    kind = type(e)
    if kind in (Const,):
        return Const(0.0, Fraction(0))
    if kind is TimeVar:
        return Const(1.0, Fraction(1))
    if kind is Neg:
        return _neg(derivative(e.arg))
    if kind is Add:
        return _add(derivative(e.left), derivative(e.right))
    if kind is Mul:
        return _add(_mul(derivative(e.left), e.right),
                    _mul(e.left, derivative(e.right)))
    if kind is Pow:
        q = e.exponent
        return _mul(_mul(Const(float(q)), _pow(e.base, q - 1)),
                    derivative(e.base))
    if kind is Sin:
        return _mul(Cos(e.arg), derivative(e.arg))
    if kind is Cos:
        return _mul(_neg(Sin(e.arg)), derivative(e.arg))
    if kind is Exp:
        return _mul(e, derivative(e.arg))
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))")

_FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp}


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}",
                             len(text) - len(stripped))
        if m.lastgroup is not None:
            tokens.append(_Token(m.lastgroup, m.group(m.lastgroup),
                                 m.start(m.lastgroup)))
        i = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0

    def peek(self) -> _Token:
        return self.tokens[self.k]

    def advance(self) -> _Token:
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}", tok.pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expression()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.pos)
        return e

    def expression(self) -> Expr:
        e = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                rhs = self.term()
                e = _add(e, rhs) if tok.text == "+" else _add(e, _neg(rhs))
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.advance()
                rhs = self.unary()
                if tok.text == "*":
                    e = _mul(e, rhs)
                else:
                    e = _mul(e, _pow(rhs, Fraction(-1)))
            else:
                return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return _neg(self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            epos = self.peek().pos
            exponent_expr = self.unary()
            q = _rational_value(exponent_expr)
            if q is None:
                raise ParseError("exponent must be a rational constant", epos)
            return _pow(base, q)
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Const(float(tok.text), Fraction(tok.text))
        if tok.kind == "name":
            if tok.text == "t":
                return TimeVar()
            if tok.text == "pi":
                return Const(math.pi)
            if tok.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return _FUNCTIONS[tok.text](arg)
            raise ParseError(f"unknown name {tok.text!r}", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            e = self.expression()
            self.expect_op(")")
            return e
        raise ParseError(
            f"expected a value, got {tok.text!r}" if tok.text else
            "unexpected end of input", tok.pos)


def _rational_value(e: Expr) -> Fraction | None:
    """Exact rational value of a constant subtree, None when not available."""
    kind = type(e)
    if kind is Const:
        return e.exact
    if kind is Neg:
        v = _rational_value(e.arg)
        return None if v is None else -v
    if kind is Add:
        a, b = _rational_value(e.left), _rational_value(e.right)
        return None if a is None or b is None else a + b
    if kind is Mul:
        a, b = _rational_value(e.left), _rational_value(e.right)
        return None if a is None or b is None else a * b
    if kind is Pow:
        a = _rational_value(e.base)
        if a is None or e.exponent.denominator != 1:
            return None
        n = e.exponent.numerator
        if a == 0 and n < 0:
            return None
        return a ** n
    return None


def parse_expression(text: str) -> Expr:
    """Parse source text into an expression tree.

    Raises ParseError with a 0-based .position (reported 1-based in the
    message) on malformed input.
    """
    if not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# periodic coefficients

_EXTREMA_SAMPLES = 4096
_REFINE_SEEDS = 8
_PERIOD_GRID = 256
_PERIOD_RTOL = 1e-10


@dataclass(frozen=True)
class Extrema:
    min_value: float
    max_value: float
    t_min: float
    t_max: float


@dataclass(frozen=True)
class PeriodicCoeff:
    """An expression plus its period, validated on construction.

    The period check compares f(t) against f(t + omega) on a 256-point grid
    with relative tolerance 1e-10; non-periodic expressions are rejected
    rather than silently wrapped.
    """

    expr: Expr
    omega: float

    def __post_init__(self):
        if not (self.omega > 0.0) or not math.isfinite(self.omega):
            raise ValueError("period must be a positive finite number")
        ts = np.linspace(0.0, self.omega, _PERIOD_GRID, endpoint=False)
        f0 = evaluate(self.expr, ts)
        f1 = evaluate(self.expr, ts + self.omega)
        gap = np.abs(f1 - f0) - _PERIOD_RTOL * (1.0 + np.abs(f0))
        if np.any(gap > 0.0):
            worst = int(np.argmax(gap))
            raise PeriodicityError(
                f"expression is not {self.omega}-periodic: "
                f"|f(t+omega)-f(t)| = {abs(f1[worst] - f0[worst]):.3e} "
                f"at t = {ts[worst]:.6f}")

    def __call__(self, t):
        return evaluate(self.expr, t)

    def derivative(self) -> "PeriodicCoeff":
        return PeriodicCoeff(derivative(self.expr), self.omega)

    def scaled(self, factor: float) -> "PeriodicCoeff":
        return PeriodicCoeff(_mul(Const(float(factor)), self.expr), self.omega)

    def plus(self, other: "PeriodicCoeff") -> "PeriodicCoeff":
        return PeriodicCoeff(_add(self.expr, other.expr), self.omega)

    def extrema(self) -> Extrema:
        """Global extrema over one period.

        Dense sampling locates candidate cells; golden-section refinement
        around the best seeds polishes each candidate, so values are correct
        to ~1e-8 even when the true extremum falls between samples.
        """
        ts = np.linspace(0.0, self.omega, _EXTREMA_SAMPLES + 1)
        vals = self(ts)
        step = self.omega / _EXTREMA_SAMPLES

        def refine(sign: float) -> tuple[float, float]:
            signed = sign * vals
            order = np.argsort(signed)[:_REFINE_SEEDS]
            best_t = float(ts[order[0]])
            best_v = float(signed[order[0]])
            for idx in order:
                lo = max(0.0, ts[idx] - step)
                hi = min(self.omega, ts[idx] + step)
                tm, vm = golden_min(lambda u: sign * float(self(float(u))),
                                    lo, hi, tol=1e-12 * max(1.0, self.omega))
                if vm < best_v:
                    best_t, best_v = tm, vm
            return best_t, sign * best_v

        t_min, v_min = refine(1.0)
        t_max, v_max = refine(-1.0)
        return Extrema(v_min, v_max, t_min, t_max)

    def integrate(self, t0: float, t1: float) -> float:
        if t1 < t0:
            raise ValueError("integration bounds must satisfy t0 <= t1")
        return integrate_adaptive(lambda s: self(s), t0, t1)

    def mean(self) -> float:
        return self.integrate(0.0, self.omega) / self.omega

    def mean_positive_part(self) -> float:
        """Mean of max(f, 0) over one period.

        Sign changes are first isolated by bisection on a 4096-cell grid;
        the positive part is then integrated piecewise on intervals where f
        keeps one sign, so the integrand handed to the quadrature is smooth.
        """
        n = _EXTREMA_SAMPLES
        ts = np.linspace(0.0, self.omega, n + 1)
        vals = np.asarray(self(ts), dtype=float)
        cuts = [0.0]
        for i in range(n):
            a, fa = ts[i], vals[i]
            b, fb = ts[i + 1], vals[i + 1]
            if fa == 0.0:
                continue
            if fa * fb < 0.0:
                for _ in range(80):
                    m = 0.5 * (a + b)
                    fm = float(self(m))
                    if fm == 0.0 or (b - a) < 1e-14 * self.omega:
                        a = b = m
                        break
                    if fa * fm < 0.0:
                        b, fb = m, fm
                    else:
                        a, fa = m, fm
                cuts.append(0.5 * (a + b))
        cuts.append(self.omega)
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo < 1e-14 * self.omega:
                continue
            if float(self(0.5 * (lo + hi))) > 0.0:
                total += self.integrate(lo, hi)
        return max(total, 0.0) / self.omega

    # classification helpers used when choosing the kernel construction
    def max_abs(self) -> float:
        ts = np.linspace(0.0, self.omega, 257)
        return float(np.max(np.abs(self(ts))))

    def is_zero(self, tol: float = 1e-13) -> bool:
        return self.max_abs() <= tol

    def constant_value(self) -> float | None:
        """The constant value of this coefficient, or None if it varies."""
        ts = np.linspace(0.0, self.omega, 257)
        vals = np.asarray(self(ts), dtype=float)
        mean = float(np.mean(vals))
        if float(np.max(vals) - np.min(vals)) <= 1e-12 * (1.0 + abs(mean)):
            return mean
        return None
