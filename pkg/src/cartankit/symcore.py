"""Exact symbolic expression kernel on coordinate charts.

Expression trees over rational constants and named coordinates, with a fixed
infix grammar, partial differentiation, a deterministic canonical form
(constant folding, flattening, ordered like-term collection -- no trig or
rational-function rewriting), numeric evaluation with domain guards, and a
two-tier zero test: exact cancellation first, then seeded sampling on the
chart's box with witness reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Sym",
    "Neg",
    "Add",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "Chart",
    "ZeroPolicy",
    "ZeroVerdict",
    "ParseError",
    "DomainError",
    "parse",
    "canon",
    "diff",
    "evaluate",
    "is_zero",
    "const",
    "sym",
    "ZERO",
    "ONE",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

Number = Union[int, Fraction]


class ParseError(ValueError):
    """Raised on malformed expression text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DomainError(ArithmeticError):
    """Raised when numeric evaluation leaves the expression's domain.

    ``culprit`` is the grammar rendering of the offending subexpression.
    """

    def __init__(self, reason: str, culprit: "Expr"):
        self.culprit = culprit
        super().__init__(f"{reason} in {culprit}")


def _coerce(value) -> "Expr":
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    raise TypeError(f"cannot use {value!r} as an expression")


class Expr:
    """Immutable expression node; subclasses define the node kinds.

    Arithmetic operators build raw (uncanonicalized) trees; call
    :func:`canon` or :func:`is_zero` to normalize/decide.
    """

    __slots__ = ("_hash", "_canonical", "_key")

    def __init__(self):
        self._canonical = None
        self._key = None

    # -- operator sugar (int and Fraction coerce to Const) --------------

    def __add__(self, other):
        return Add((self, _coerce(other)))

    def __radd__(self, other):
        return Add((_coerce(other), self))

    def __sub__(self, other):
        return Add((self, Neg(_coerce(other))))

    def __rsub__(self, other):
        return Add((_coerce(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, _coerce(other)))

    def __rmul__(self, other):
        return Mul((_coerce(other), self))

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, exponent: int):
        return Pow(self, exponent)

    def __neg__(self):
        return Neg(self)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"<expr {to_text(self)}>"

    def children(self) -> tuple["Expr", ...]:
        return ()

    def symbols(self) -> frozenset:
        out = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Sym):
                out.add(node.name)
            else:
                stack.extend(node.children())
        return frozenset(out)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = Fraction(value)
        self._hash = hash(("c", self.value))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Const) and self.value == other.value


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        super().__init__()
        self.name = name
        self._hash = hash(("s", name))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Sym) and self.name == other.name


class Neg(Expr):
    __slots__ = ("operand",)

    def __init__(self, operand: Expr):
        super().__init__()
        self.operand = operand
        self._hash = hash(("n", operand._hash))

    def children(self):
        return (self.operand,)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Neg) and self.operand == other.operand


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        super().__init__()
        self.terms = tuple(terms)
        self._hash = hash(("a",) + tuple(t._hash for t in self.terms))

    def children(self):
        return self.terms

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Add)
            and self._hash == other._hash
            and self.terms == other.terms
        )


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        super().__init__()
        self.factors = tuple(factors)
        self._hash = hash(("m",) + tuple(f._hash for f in self.factors))

    def children(self):
        return self.factors

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Mul)
            and self._hash == other._hash
            and self.factors == other.factors
        )


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        super().__init__()
        self.num = num
        self.den = den
        self._hash = hash(("d", num._hash, den._hash))

    def children(self):
        return (self.num, self.den)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Div)
            and self._hash == other._hash
            and self.num == other.num
            and self.den == other.den
        )


class Pow(Expr):
    """Integer power only; fractional powers go through sqrt."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: int):
        super().__init__()
        if not isinstance(exponent, int):
            raise TypeError("exponent must be a Python int")
        self.base = base
        self.exponent = exponent
        self._hash = hash(("p", base._hash, exponent))

    def children(self):
        return (self.base,)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Pow)
            and self._hash == other._hash
            and self.exponent == other.exponent
            and self.base == other.base
        )


class Call(Expr):
    __slots__ = ("func", "arg")

    def __init__(self, func: str, arg: Expr):
        super().__init__()
        if func not in FUNCTIONS:
            raise ValueError(f"unknown function {func!r}")
        self.func = func
        self.arg = arg
        self._hash = hash(("f", func, arg._hash))

    def children(self):
        return (self.arg,)

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Call)
            and self._hash == other._hash
            and self.func == other.func
            and self.arg == other.arg
        )


ZERO = Const(0)
ONE = Const(1)


def const(value) -> Const:
    return Const(Fraction(value))


def sym(name: str) -> Sym:
    return Sym(name)


# ---------------------------------------------------------------------------
# Parsing.  Grammar (whitespace-insensitive):
#
#   expr   := term (('+'|'-') term)*
#   term   := unary (('*'|'/') unary)*
#   unary  := '-' unary | pow
#   pow    := atom ('^' signed-integer)?
#   atom   := number | ident | func '(' expr ')' | '(' expr ')'
#   number := digits ('.' digits)?
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, names: frozenset):
        self.text = text
        self.pos = 0
        self.names = names

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str):
        if not self.take(ch):
            raise self.error(f"expected {ch!r}")

    def parse(self) -> Expr:
        node = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                node = Add((node, self.term()))
            elif ch == "-":
                self.pos += 1
                node = Add((node, Neg(self.term())))
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                node = Mul((node, self.unary()))
            elif ch == "/":
                self.pos += 1
                node = Div(node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        if self.take("-"):
            return Neg(self.unary())
        return self.pow()

    def pow(self) -> Expr:
        base = self.atom()
        if self.take("^"):
            sign = -1 if self.take("-") else 1
            self.skip_ws()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if self.pos == start:
                raise self.error("expected integer exponent")
            return Pow(base, sign * int(self.text[start : self.pos]))
        return base

    def atom(self) -> Expr:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if ch.isdigit():
            return self.number()
        if ch.isalpha() or ch == "_":
            return self.ident()
        raise self.error("expected a number, name, or parenthesis")

    def number(self) -> Expr:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            frac_start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if self.pos == frac_start:
                raise self.error("expected digits after decimal point")
        return Const(Fraction(self.text[start : self.pos]))

    def ident(self) -> Expr:
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        name = self.text[start : self.pos]
        if self.peek() == "(":
            if name not in FUNCTIONS:
                self.pos = start
                raise self.error(f"unknown function {name!r}")
            self.pos += 1
            arg = self.expr()
            self.expect(")")
            return Call(name, arg)
        if name not in self.names:
            self.pos = start
            raise self.error(f"unknown identifier {name!r}")
        return Sym(name)


def parse(text: str, chart: "Chart") -> Expr:
    """Parse ``text`` against the chart's coordinate names."""
    return _Parser(text, frozenset(chart.coords)).parse()


# ---------------------------------------------------------------------------
# Printing with minimal parenthesization; output re-parses to the same
# canonical form.
# ---------------------------------------------------------------------------


def _frac_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_text(e: Expr) -> str:
    if isinstance(e, Const):
        return _frac_text(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(
            e.operand,
            need_parens=isinstance(e.operand, (Add, Mul, Div))
            or _is_negative_const(e.operand),
        )
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            sign, body = _signed_text(t)
            if i == 0:
                parts.append(("-" if sign < 0 else "") + body)
            else:
                parts.append((" - " if sign < 0 else " + ") + body)
        return "".join(parts)
    if isinstance(e, Mul):
        return "*".join(
            _wrap(f, need_parens=isinstance(f, (Add, Div, Neg)) or _is_negative_const(f))
            for f in e.factors
        )
    if isinstance(e, Div):
        num = _wrap(e.num, need_parens=isinstance(e.num, (Add, Neg)))
        # A rational constant like 1/2 prints with its own slash, so as a
        # denominator it needs parens to survive re-parsing left-associatively.
        den = _wrap(
            e.den,
            need_parens=isinstance(e.den, (Add, Mul, Div, Neg))
            or (isinstance(e.den, Const) and e.den.value.denominator != 1),
        )
        return f"{num}/{den}"
    if isinstance(e, Pow):
        base = _wrap(
            e.base,
            need_parens=not isinstance(e.base, (Sym, Call))
            and not (isinstance(e.base, Const) and e.base.value >= 0 and e.base.value.denominator == 1),
        )
        return f"{base}^{e.exponent}"
    raise TypeError(f"unprintable node {type(e).__name__}")


def _is_negative_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value < 0


def _wrap(e: Expr, need_parens: bool) -> str:
    text = to_text(e)
    return f"({text})" if need_parens else text


def _signed_text(t: Expr):
    """Signed rendering of an addend: (-1, "2*x") instead of (+1, "-2*x")."""
    if isinstance(t, Const) and t.value < 0:
        return -1, _frac_text(-t.value)
    if isinstance(t, Neg):
        return -1, _wrap(t.operand, need_parens=isinstance(t.operand, Add))
    if isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
        flipped = (Const(-t.factors[0].value),) + t.factors[1:]
        if flipped[0].value == 1 and len(flipped) > 1:
            flipped = flipped[1:]
        body = flipped[0] if len(flipped) == 1 else Mul(flipped)
        return -1, _wrap(body, need_parens=isinstance(body, (Add, Div)))
    return 1, _wrap(t, need_parens=False)


# ---------------------------------------------------------------------------
# Canonicalization.
# ---------------------------------------------------------------------------


def _sort_key(e: Expr):
    if e._key is not None:
        return e._key
    if isinstance(e, Const):
        key = (0, e.value.numerator, e.value.denominator)
    elif isinstance(e, Sym):
        key = (1, e.name)
    elif isinstance(e, Call):
        key = (2, e.func, _sort_key(e.arg))
    elif isinstance(e, Pow):
        key = (3, _sort_key(e.base), e.exponent)
    elif isinstance(e, Div):
        key = (4, _sort_key(e.num), _sort_key(e.den))
    elif isinstance(e, Mul):
        key = (5, len(e.factors)) + tuple(_sort_key(f) for f in e.factors)
    elif isinstance(e, Add):
        key = (6, len(e.terms)) + tuple(_sort_key(t) for t in e.terms)
    else:
        key = (7, len(e.children())) + tuple(_sort_key(c) for c in e.children())
    e._key = key
    return key


def _split_coeff(term: Expr):
    """Decompose a canonical addend into (rational coefficient, monomial)."""
    if isinstance(term, Const):
        return term.value, None
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        body = rest[0] if len(rest) == 1 else Mul(rest)
        return term.factors[0].value, body
    return Fraction(1), term


def _make_term(coeff: Fraction, monomial: Optional[Expr]) -> Expr:
    if monomial is None:
        return Const(coeff)
    if coeff == 1:
        return monomial
    if isinstance(monomial, Mul):
        return Mul((Const(coeff),) + monomial.factors)
    return Mul((Const(coeff), monomial))


def canon(e: Expr) -> Expr:
    """Canonical form: folded constants, flat ordered sums/products with
    like terms collected exactly.  Idempotent; performs no trigonometric or
    quotient rewriting."""
    if e._canonical is not None:
        return e._canonical
    result = _canon(e)
    result._canonical = result
    e._canonical = result
    return result


def _canon(e: Expr) -> Expr:
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Neg):
        return canon(Mul((Const(-1), e.operand)))
    if isinstance(e, Add):
        return _canon_add(e)
    if isinstance(e, Mul):
        return _canon_mul(e)
    if isinstance(e, Div):
        return _canon_div(e)
    if isinstance(e, Pow):
        return _canon_pow(canon(e.base), e.exponent)
    if isinstance(e, Call):
        return _canon_call(e.func, canon(e.arg))
    raise TypeError(f"cannot canonicalize {type(e).__name__}")


def _canon_add(e: Add) -> Expr:
    constant = Fraction(0)
    collected: dict = {}
    order: list = []
    stack = list(reversed(e.terms))

    def _collect(coeff, monomial):
        nonlocal constant
        if monomial is None:
            constant += coeff
        elif monomial in collected:
            collected[monomial] += coeff
        else:
            collected[monomial] = coeff
            order.append(monomial)

    while stack:
        part = canon(stack.pop())
        if isinstance(part, Add):
            stack.extend(reversed(part.terms))
            continue
        coeff, monomial = _split_coeff(part)
        if isinstance(monomial, Add):
            # a rational multiple of a sum is still a sum: fold it in so
            # that a - a cancels exactly (this is like-term collection,
            # not distribution of general products)
            for inner in monomial.terms:
                c2, m2 = _split_coeff(inner)
                _collect(coeff * c2, m2)
            continue
        _collect(coeff, monomial)
    terms = [
        _make_term(collected[m], m)
        for m in sorted(order, key=_sort_key)
        if collected[m] != 0
    ]
    if constant != 0:
        terms.insert(0, Const(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def _canon_mul(e: Mul) -> Expr:
    coeff = Fraction(1)
    powers: dict = {}
    order: list = []
    stack = list(reversed(e.factors))
    while stack:
        part = canon(stack.pop())
        if isinstance(part, Mul):
            stack.extend(reversed(part.factors))
            continue
        if isinstance(part, Const):
            coeff *= part.value
            continue
        if isinstance(part, Pow) and not isinstance(part.base, Div):
            base, exponent = part.base, part.exponent
        else:
            base, exponent = part, 1
        if base in powers:
            powers[base] += exponent
        else:
            powers[base] = exponent
            order.append(base)
    if coeff == 0:
        return ZERO
    factors = []
    for base in sorted(order, key=_sort_key):
        exponent = powers[base]
        if exponent == 0:
            continue
        factors.append(_canon_pow(base, exponent))
    # re-fold: _canon_pow may return constants (e.g. merged exponents hit 0)
    clean = []
    for f in factors:
        if isinstance(f, Const):
            coeff *= f.value
        else:
            clean.append(f)
    if coeff == 0:
        return ZERO
    if not clean:
        return Const(coeff)
    if coeff != 1:
        clean.insert(0, Const(coeff))
    if len(clean) == 1:
        return clean[0]
    return Mul(tuple(clean))


def _canon_div(e: Div) -> Expr:
    num = canon(e.num)
    den = canon(e.den)
    if isinstance(den, Const) and den.value != 0:
        return canon(Mul((Const(1 / den.value), num)))
    if isinstance(num, Const) and num.value == 0 and not (
        isinstance(den, Const) and den.value == 0
    ):
        return ZERO
    return Div(num, den)


def _canon_pow(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value != 0:
            return Const(base.value**exponent)
        if exponent > 0:
            return ZERO
        return Pow(base, exponent)  # 0^negative: left for eval to flag
    if isinstance(base, Pow):
        return _canon_pow(base.base, base.exponent * exponent)
    if isinstance(base, Mul):
        return canon(Mul(tuple(Pow(f, exponent) for f in base.factors)))
    return Pow(base, exponent)


_EXACT_CALLS = {
    ("sin", Fraction(0)): Fraction(0),
    ("cos", Fraction(0)): Fraction(1),
    ("tan", Fraction(0)): Fraction(0),
    ("exp", Fraction(0)): Fraction(1),
    ("log", Fraction(1)): Fraction(0),
}


def _canon_call(func: str, arg: Expr) -> Expr:
    if isinstance(arg, Const):
        folded = _EXACT_CALLS.get((func, arg.value))
        if folded is not None:
            return Const(folded)
        if func == "sqrt" and arg.value >= 0:
            root = Fraction(
                math.isqrt(arg.value.numerator), math.isqrt(arg.value.denominator)
            )
            if root * root == arg.value:
                return Const(root)
    return Call(func, arg)


# ---------------------------------------------------------------------------
# Differentiation.
# ---------------------------------------------------------------------------


def diff(e: Expr, name: str) -> Expr:
    """Partial derivative with respect to the coordinate ``name`` (raw tree)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == name else ZERO
    if isinstance(e, Neg):
        return Neg(diff(e.operand, name))
    if isinstance(e, Add):
        return Add(tuple(diff(t, name) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + (diff(f, name),) + e.factors[i + 1 :]
            terms.append(Mul(rest))
        return Add(tuple(terms))
    if isinstance(e, Div):
        return Div(
            Add(
                (
                    Mul((diff(e.num, name), e.den)),
                    Neg(Mul((e.num, diff(e.den, name)))),
                )
            ),
            Pow(e.den, 2),
        )
    if isinstance(e, Pow):
        return Mul(
            (Const(e.exponent), Pow(e.base, e.exponent - 1), diff(e.base, name))
        )
    if isinstance(e, Call):
        inner = diff(e.arg, name)
        if e.func == "sin":
            outer = Call("cos", e.arg)
        elif e.func == "cos":
            outer = Neg(Call("sin", e.arg))
        elif e.func == "tan":
            outer = Add((ONE, Pow(Call("tan", e.arg), 2)))
        elif e.func == "exp":
            outer = e
        elif e.func == "log":
            outer = Div(ONE, e.arg)
        elif e.func == "sqrt":
            outer = Div(ONE, Mul((Const(2), e)))
        else:  # pragma: no cover - FUNCTIONS is closed
            raise ValueError(e.func)
        return Mul((outer, inner))
    raise TypeError(f"cannot differentiate {type(e).__name__}")


# ---------------------------------------------------------------------------
# Evaluation.
# ---------------------------------------------------------------------------


def evaluate(e: Expr, env: dict) -> float:
    """Evaluate at a point given as ``{coordinate name: float}``.

    Raises :class:`DomainError` on division by zero, ``log`` of a
    non-positive value, ``sqrt`` of a negative value, ``0`` raised to a
    negative power, or numeric overflow to a non-finite value.
    """
    result = _eval(e, env)
    if not math.isfinite(result):
        raise DomainError("non-finite result", e)
    return result


def _eval(e: Expr, env: dict) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return env[e.name]
        except KeyError:
            raise DomainError("unbound coordinate", e) from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Add):
        return sum(_eval(t, env) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, env)
        return out
    if isinstance(e, Div):
        den = _eval(e.den, env)
        if den == 0.0:
            raise DomainError("division by zero", e)
        return _eval(e.num, env) / den
    if isinstance(e, Pow):
        base = _eval(e.base, env)
        if base == 0.0 and e.exponent < 0:
            raise DomainError("zero base with negative exponent", e)
        try:
            return base**e.exponent
        except OverflowError:
            raise DomainError("overflow", e) from None
    if isinstance(e, Call):
        arg = _eval(e.arg, env)
        if e.func == "sin":
            return math.sin(arg)
        if e.func == "cos":
            return math.cos(arg)
        if e.func == "tan":
            return math.tan(arg)
        if e.func == "exp":
            try:
                return math.exp(arg)
            except OverflowError:
                raise DomainError("overflow", e) from None
        if e.func == "log":
            if arg <= 0.0:
                raise DomainError("log of non-positive value", e)
            return math.log(arg)
        if e.func == "sqrt":
            if arg < 0.0:
                raise DomainError("sqrt of negative value", e)
            return math.sqrt(arg)
    raise TypeError(f"cannot evaluate {type(e).__name__}")


# ---------------------------------------------------------------------------
# Charts and the two-tier zero test.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroPolicy:
    """Sampling policy for the probabilistic tier of the zero test."""

    samples: int = 32
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    seed: int = 0


DEFAULT_POLICY = ZeroPolicy()


@dataclass(frozen=True)
class ZeroVerdict:
    """Outcome of :func:`is_zero`.

    ``path`` records which tier decided: "symbolic" for exact cancellation
    (or an exact nonzero constant), "probabilistic" for the sampled tier,
    "undecidable" when every sample point violated the domain.
    """

    zero: bool
    path: str
    witness: Optional[tuple] = None
    value: Optional[float] = None

    def __bool__(self):
        return self.zero


class Chart:
    """A coordinate chart: ordered names plus a rational sampling box.

    ``guards`` are expressions that must be bounded away from zero on the
    box (declared singular loci); violation raises ``ValueError`` at
    construction so a bad box is caught early.
    """

    def __init__(
        self,
        coords,
        box,
        guards: tuple = (),
    ):
        coords = tuple(coords)
        if len(set(coords)) != len(coords):
            raise ValueError("duplicate coordinate names")
        for name in coords:
            if not name or not (name[0].isalpha() or name[0] == "_"):
                raise ValueError(f"bad coordinate name {name!r}")
            if name in FUNCTIONS:
                raise ValueError(f"coordinate name {name!r} shadows a function")
        box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in box)
        if len(box) != len(coords):
            raise ValueError("box must have one interval per coordinate")
        for lo, hi in box:
            if not lo < hi:
                raise ValueError("box intervals must have lo < hi")
        self.coords = coords
        self.box = box
        self.guards = tuple(guards)
        for guard in self.guards:
            self._check_guard(guard)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __eq__(self, other):
        return (
            isinstance(other, Chart)
            and self.coords == other.coords
            and self.box == other.box
        )

    def __hash__(self):
        return hash((self.coords, self.box))

    def __repr__(self):
        spans = ", ".join(f"{n}:[{float(lo):g},{float(hi):g}]" for n, (lo, hi) in zip(self.coords, self.box))
        return f"<chart {spans}>"

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        """Deterministic uniform samples in the box, shape (count, dim)."""
        rng = np.random.default_rng([seed, count, self.dim])
        lo = np.array([float(b[0]) for b in self.box])
        hi = np.array([float(b[1]) for b in self.box])
        return lo + rng.random((count, self.dim)) * (hi - lo)

    def env(self, point) -> dict:
        return dict(zip(self.coords, (float(x) for x in point)))

    def midpoint(self) -> tuple:
        return tuple(float((lo + hi) / 2) for lo, hi in self.box)

    def _check_guard(self, guard: Expr):
        points = list(self.sample_points(64, seed=1))
        points.append(np.array(self.midpoint()))
        values = []
        for p in points:
            try:
                values.append(evaluate(guard, self.env(p)))
            except DomainError:
                raise ValueError(f"guard {guard} undefined inside the box")
        if min(abs(v) for v in values) <= 1e-9 or (
            min(values) < 0.0 < max(values)
        ):
            raise ValueError(f"box does not avoid the locus {guard} = 0")


def is_zero(
    e: Expr,
    chart: Chart,
    policy: ZeroPolicy = DEFAULT_POLICY,
) -> ZeroVerdict:
    """Two-tier zero test on the chart's box.

    Tier one: exact -- is the canonical form the literal 0 (or a nonzero
    rational)?  Tier two: evaluate at ``policy.samples`` seeded points; the
    expression passes as zero iff every |value| <= abs_tol + rel_tol*scale,
    where scale is the largest magnitude attained by any single collected
    term over all valid samples.  Fails with the largest-magnitude witness.
    """
    reduced = canon(e)
    if isinstance(reduced, Const):
        if reduced.value == 0:
            return ZeroVerdict(True, "symbolic")
        mid = chart.midpoint()
        return ZeroVerdict(False, "symbolic", witness=mid, value=float(reduced.value))

    terms = reduced.terms if isinstance(reduced, Add) else (reduced,)
    points = chart.sample_points(policy.samples, policy.seed)
    scale = 0.0
    values = []  # (point, total) for valid samples
    for point in points:
        env = chart.env(point)
        try:
            term_values = [evaluate(t, env) for t in terms]
        except DomainError:
            continue
        total = math.fsum(term_values)
        if not math.isfinite(total):
            continue
        scale = max(scale, max(abs(v) for v in term_values))
        values.append((tuple(point), total))

    if not values:
        return ZeroVerdict(False, "undecidable")

    threshold = policy.abs_tol + policy.rel_tol * scale
    worst_point, worst_value = max(values, key=lambda pv: abs(pv[1]))
    if abs(worst_value) <= threshold:
        return ZeroVerdict(True, "probabilistic")
    return ZeroVerdict(False, "probabilistic", witness=worst_point, value=worst_value)
