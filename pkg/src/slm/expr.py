"""One-variable arithmetic expressions for coefficients, integrands and means.

Grammar (whitespace ignored between tokens):

    expr   := term { ("+"|"-") term }
    term   := factor { ("*"|"/") factor }
    factor := ["-"] power
    power  := atom [ "^" factor ]
    atom   := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := "exp" | "log" | "abs" | "sqrt" | "erf" | "normcdf"

"^" is right-associative and a leading minus applies to the whole power,
so "-x^2" parses as -(x^2).  "^" with a fractional exponent on a negative
base is a domain error; write abs(x)^p instead.

Evaluation is IEEE-style: overflow propagates as +/-inf, domain errors
(log or sqrt of a negative number, 0/0, fractional powers of negatives)
surface as EvalDomainError from scalar evaluation and as NaN from the
array evaluators.  eval_log computes log|e(x)| by decomposing products,
quotients, powers and exponentials structurally, so integrands like
exp(x^2) stay usable far beyond float range.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import erf as _erf, ndtr as _ndtr

from .core import SlmError


class ExprError(SlmError, ValueError):
    """Parse failure; offset is the byte position in the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(SlmError, ArithmeticError):
    """Evaluation hit a domain violation (e.g. log of a negative number)."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Sub:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Mul:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Div:
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

FUNCTIONS = ("exp", "log", "abs", "sqrt", "erf", "normcdf")

_NUMBER_RE = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


# ---------------------------------------------------------------------------
# parser


_MAX_DEPTH = 150  # nesting guard: report an error instead of blowing the stack


class _Parser:
    def __init__(self, source: str, var_name: str):
        self.src = source
        self.var = var_name
        self.pos = 0
        self.depth = 0

    def error(self, message: str) -> ExprError:
        return ExprError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def take(self, ch: str):
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        self.skip_ws()
        if self.pos != len(self.src):
            raise self.error(f"unexpected {self.src[self.pos]!r}")
        return e

    def expr(self) -> Expr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise self.error("expression nested too deeply")
        try:
            e = self.term()
            while True:
                ch = self.peek()
                if ch == "+":
                    self.pos += 1
                    e = Add(e, self.term())
                elif ch == "-":
                    self.pos += 1
                    e = Sub(e, self.term())
                else:
                    return e
        finally:
            self.depth -= 1

    def term(self) -> Expr:
        e = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                e = Mul(e, self.factor())
            elif ch == "/":
                self.pos += 1
                e = Div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.power())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return Pow(e, self.factor())
        return e

    def atom(self) -> Expr:
        ch = self.peek()
        if ch == "":
            raise self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.take(")")
            return e
        m = _NUMBER_RE.match(self.src, self.pos)
        if m:
            self.pos = m.end()
            return Num(float(m.group(0)))
        m = _IDENT_RE.match(self.src, self.pos)
        if m:
            name = m.group(0)
            if name == self.var:
                self.pos = m.end()
                return Var()
            if name in FUNCTIONS:
                self.pos = m.end()
                self.take("(")
                e = self.expr()
                self.take(")")
                return Call(name, e)
            raise self.error(f"unknown identifier {name!r}")
        raise self.error(f"unexpected {ch!r}")


def parse_expr(source: str, var_name: str = "x") -> Expr:
    """Parse source over the single variable var_name."""
    if not source or not source.strip():
        raise ExprError("empty expression", 0)
    if var_name in FUNCTIONS or not _IDENT_RE.fullmatch(var_name):
        raise ExprError(f"invalid variable name {var_name!r}", 0)
    return _Parser(source, var_name).parse()


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt(e: Expr, minprec: int, var_name: str) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return var_name
    if isinstance(e, Call):
        return f"{e.fn}({_fmt(e.arg, _PREC_ADD, var_name)})"
    if isinstance(e, Neg):
        s = "-" + _fmt(e.arg, _PREC_POW, var_name)
        prec = _PREC_UNARY
    elif isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        s = f"{_fmt(e.lhs, _PREC_ADD, var_name)} {op} {_fmt(e.rhs, _PREC_MUL, var_name)}"
        prec = _PREC_ADD
    elif isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        s = f"{_fmt(e.lhs, _PREC_MUL, var_name)} {op} {_fmt(e.rhs, _PREC_UNARY, var_name)}"
        prec = _PREC_MUL
    elif isinstance(e, Pow):
        s = f"{_fmt(e.base, _PREC_ATOM, var_name)}^{_fmt(e.exponent, _PREC_UNARY, var_name)}"
        prec = _PREC_POW
    else:  # pragma: no cover
        raise TypeError(f"not an Expr node: {e!r}")
    return f"({s})" if prec < minprec else s


def to_source(e: Expr, var_name: str = "x") -> str:
    """Render e so that parse_expr(to_source(e)) rebuilds the same tree."""
    return _fmt(e, _PREC_ADD, var_name)


def reflect_var(e: Expr) -> Expr:
    """Substitute -x for x (for integrating over the negative half-line)."""
    if isinstance(e, (Num,)):
        return e
    if isinstance(e, Var):
        return Neg(Var())
    if isinstance(e, Neg):
        return Neg(reflect_var(e.arg))
    if isinstance(e, Add):
        return Add(reflect_var(e.lhs), reflect_var(e.rhs))
    if isinstance(e, Sub):
        return Sub(reflect_var(e.lhs), reflect_var(e.rhs))
    if isinstance(e, Mul):
        return Mul(reflect_var(e.lhs), reflect_var(e.rhs))
    if isinstance(e, Div):
        return Div(reflect_var(e.lhs), reflect_var(e.rhs))
    if isinstance(e, Pow):
        return Pow(reflect_var(e.base), reflect_var(e.exponent))
    if isinstance(e, Call):
        return Call(e.fn, reflect_var(e.arg))
    raise TypeError(f"not an Expr node: {e!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# evaluation

_FN_ARRAY = {
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "erf": _erf,
    "normcdf": _ndtr,
}


def compile_array(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Compile e into a vectorized evaluator.

    Overflow becomes +/-inf, domain violations become NaN; no warnings
    are emitted.
    """
    f = _build_array(e)

    def run(x):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return f(np.asarray(x, dtype=np.float64))

    return run


def _build_array(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(e, Num):
        v = float(e.value)
        return lambda x: np.full_like(x, v)
    if isinstance(e, Var):
        return lambda x: x.copy()
    if isinstance(e, Neg):
        f = _build_array(e.arg)
        return lambda x: -f(x)
    if isinstance(e, Add):
        f, g = _build_array(e.lhs), _build_array(e.rhs)
        return lambda x: f(x) + g(x)
    if isinstance(e, Sub):
        f, g = _build_array(e.lhs), _build_array(e.rhs)
        return lambda x: f(x) - g(x)
    if isinstance(e, Mul):
        f, g = _build_array(e.lhs), _build_array(e.rhs)
        return lambda x: f(x) * g(x)
    if isinstance(e, Div):
        f, g = _build_array(e.lhs), _build_array(e.rhs)
        return lambda x: f(x) / g(x)
    if isinstance(e, Pow):
        f, g = _build_array(e.base), _build_array(e.exponent)
        return lambda x: np.power(f(x), g(x))
    if isinstance(e, Call):
        f = _build_array(e.arg)
        fn = _FN_ARRAY[e.fn]
        return lambda x: fn(f(x))
    raise TypeError(f"not an Expr node: {e!r}")  # pragma: no cover


def compile_log_array(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Compile e into an evaluator of log|e(x)|.

    Products, quotients, powers and exponentials are decomposed
    structurally (log|a*b| = log|a| + log|b|, log(exp(a)) = a, ...), so
    magnitudes far beyond float range evaluate exactly.  Anything else
    falls back to log(|value|) of the direct evaluation.
    """
    f = _build_log(e)

    def run(x):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return f(np.asarray(x, dtype=np.float64))

    return run


def _build_log(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(e, Mul):
        f, g = _build_log(e.lhs), _build_log(e.rhs)
        return lambda x: f(x) + g(x)
    if isinstance(e, Div):
        f, g = _build_log(e.lhs), _build_log(e.rhs)
        return lambda x: f(x) - g(x)
    if isinstance(e, Pow):
        lb = _build_log(e.base)
        ex = _build_array(e.exponent)
        return lambda x: ex(x) * lb(x)
    if isinstance(e, Neg):
        return _build_log(e.arg)
    if isinstance(e, Call) and e.fn == "exp":
        return _build_array(e.arg)
    if isinstance(e, Call) and e.fn == "abs":
        return _build_log(e.arg)
    direct = _build_array(e)
    return lambda x: np.log(np.abs(direct(x)))


def eval_array(e: Expr, x: np.ndarray) -> np.ndarray:
    """Vectorized evaluation (one-shot; compile_array amortizes the walk)."""
    return compile_array(e)(x)


def eval_log_array(e: Expr, x: np.ndarray) -> np.ndarray:
    return compile_log_array(e)(x)


def eval_expr(e: Expr, v: float) -> float:
    """Evaluate at a scalar.  Overflow returns +/-inf; a domain violation
    raises EvalDomainError."""
    if not math.isfinite(v):
        raise EvalDomainError(f"input must be finite, got {v}")
    out = float(compile_array(e)(np.float64(v)))
    if math.isnan(out):
        raise EvalDomainError(f"domain error evaluating expression at {v}")
    return out


def eval_log(e: Expr, v: float) -> float:
    """log|e(v)| with structural overflow protection.

    Agrees with log(eval_expr(e, v)) whenever the direct value is positive
    and representable; a domain violation raises EvalDomainError.
    """
    if not math.isfinite(v):
        raise EvalDomainError(f"input must be finite, got {v}")
    out = float(compile_log_array(e)(np.float64(v)))
    if math.isnan(out):
        raise EvalDomainError(f"domain error evaluating log-expression at {v}")
    return out
