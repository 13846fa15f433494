"""Exact multivariate polynomials and rational functions over named parameters.

Coefficients are :class:`fractions.Fraction`; nothing is rounded until a
function is evaluated.  Monomials are tuples of ``(name, exponent)`` pairs
sorted by name, which makes them hashable and canonical.

Normalization is deliberately shallow: a rational function keeps its
denominator monic under graded-lex order and collapses constant denominators
into the numerator, but it does not compute multivariate GCDs.  Equality is
decided by cross-multiplication, so reduced form is never needed for
correctness.  Repeated arithmetic can therefore grow terms; callers that care
(the state-elimination engine) keep rows over a shared denominator instead.
"""
from __future__ import annotations

import re
from fractions import Fraction
from math import gcd as _gcd
from numbers import Rational
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from .errors import (
    DenominatorNearZero,
    DivisionByZeroFunction,
    MissingParameter,
    PrestoSyntaxError,
)

__all__ = [
    "EPSILON_DEN",
    "Monomial",
    "Polynomial",
    "RationalFunction",
    "parse_expression",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "evaluate",
    "equals",
]

EPSILON_DEN = 1e-12

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Monomial = Tuple[Tuple[str, int], ...]
Number = Union[int, Fraction, str]

ONE_MONO: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for name, e in b:
        merged[name] = merged.get(name, 0) + e
    return tuple(sorted(merged.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _grlex_key(m: Monomial, names: Tuple[str, ...]):
    exps = dict(m)
    return (_mono_degree(m), tuple(exps.get(n, 0) for n in names))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational, str)):
        return Fraction(c)
    if isinstance(c, float):
        # floats go through their shortest repr so 0.95 means 19/20
        return Fraction(repr(c))
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class Polynomial:
    """Sparse polynomial with exact rational coefficients.  Immutable."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                if c:
                    clean[m] = c if isinstance(c, Fraction) else _as_fraction(c)
        self._terms: Dict[Monomial, Fraction] = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, c: Number) -> "Polynomial":
        c = _as_fraction(c)
        return cls._raw({ONE_MONO: c} if c else {})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "Polynomial":
        if not IDENT_RE.match(name):
            raise ValueError(f"invalid parameter name {name!r}")
        if power < 0:
            raise ValueError("negative exponents are not polynomial")
        if power == 0:
            return cls.constant(1)
        return cls._raw({((name, power),): Fraction(1)})

    @classmethod
    def from_exponents(cls, items: Iterable[Tuple[Number, Mapping[str, int]]]) -> "Polynomial":
        acc: Dict[Monomial, Fraction] = {}
        for coeff, exps in items:
            m = tuple(sorted((n, int(e)) for n, e in exps.items() if int(e) != 0))
            if any(e < 0 for _, e in m):
                raise ValueError("negative exponent in polynomial term")
            acc[m] = acc.get(m, Fraction(0)) + _as_fraction(coeff)
        return cls(acc)

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE_MONO in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get(ONE_MONO, Fraction(0))

    def is_one(self) -> bool:
        return len(self._terms) == 1 and self._terms.get(ONE_MONO) == 1

    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted({n for m in self._terms for n, _ in m}))

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def leading_term(self) -> Tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        names = self.variables()
        m = max(self._terms, key=lambda mono: _grlex_key(mono, names))
        return m, self._terms[m]

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Polynomial":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for m, c in other._terms.items():
            v = acc.get(m)
            if v is None:
                acc[m] = c
            else:
                v += c
                if v:
                    acc[m] = v
                else:
                    del acc[m]
        return Polynomial._raw(acc)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return _coerce_poly(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return Polynomial._raw({})
        if other.is_one():
            return self
        if self.is_one():
            return other
        acc: Dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                v = acc.get(m)
                acc[m] = ca * cb if v is None else v + ca * cb
        return Polynomial._raw({m: c for m, c in acc.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c: Number) -> "Polynomial":
        c = _as_fraction(c)
        if not c:
            return Polynomial._raw({})
        if c == 1:
            return self
        return Polynomial._raw({m: v * c for m, v in self._terms.items()})

    def primitive(self) -> Tuple[Fraction, "Polynomial"]:
        """Split into ``(content, primitive part)``; the primitive part has
        coprime integer coefficients and a positive leading coefficient."""
        if not self._terms:
            return Fraction(0), self
        from math import gcd, lcm

        den = 1
        for c in self._terms.values():
            den = lcm(den, c.denominator)
        num = 0
        for c in self._terms.values():
            num = gcd(num, c.numerator * (den // c.denominator))
        content = Fraction(num, den)
        if self.leading_term()[1] < 0:
            content = -content
        return content, self.scale(1 / content)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Mapping[str, float]) -> float:
        total = 0.0
        for m, c in self._terms.items():
            t = float(c)
            for name, e in m:
                try:
                    t *= float(point[name]) ** e
                except KeyError:
                    raise MissingParameter(f"no value for parameter {name!r}") from None
            total += t
        return total

    def evaluate_exact(self, point: Mapping[str, Number]) -> Fraction:
        # work over a common denominator with integer arithmetic; Fraction
        # normalization on every term is the bottleneck otherwise
        nums, dens = {}, {}
        for name in self.variables():
            if name not in point:
                raise MissingParameter(f"no value for parameter {name!r}")
            x = _as_fraction(point[name])
            nums[name], dens[name] = x.numerator, x.denominator
        maxexp: Dict[str, int] = {}
        for m in self._terms:
            for name, e in m:
                if e > maxexp.get(name, 0):
                    maxexp[name] = e
        coeff_den = 1
        for c in self._terms.values():
            coeff_den = coeff_den * c.denominator // _gcd(coeff_den, c.denominator)
        pow_cache: Dict[Tuple[str, int], int] = {}

        def npow(name, e):
            key = (name, e)
            v = pow_cache.get(key)
            if v is None:
                v = pow_cache[key] = nums[name] ** e * dens[name] ** (maxexp[name] - e)
            return v

        total = 0
        for m, c in self._terms.items():
            t = c.numerator * (coeff_den // c.denominator)
            seen = set()
            for name, e in m:
                t *= npow(name, e)
                seen.add(name)
            for name in maxexp:
                if name not in seen:
                    t *= npow(name, 0)
            total += t
        den = coeff_den
        for name, e in maxexp.items():
            den *= dens[name] ** e
        return Fraction(total, den)

    def substitute(self, values: Mapping[str, Number]) -> "Polynomial":
        """Replace some parameters by exact constants."""
        acc: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            keep = []
            for name, e in m:
                if name in values:
                    c = c * _as_fraction(values[name]) ** e
                else:
                    keep.append((name, e))
            k = tuple(keep)
            acc[k] = acc.get(k, Fraction(0)) + c
        return Polynomial(acc)

    def rename(self, mapping: Mapping[str, str]) -> "Polynomial":
        acc: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            merged: Dict[str, int] = {}
            for name, e in m:
                n = mapping.get(name, name)
                merged[n] = merged.get(n, 0) + e
            k = tuple(sorted(merged.items()))
            acc[k] = acc.get(k, Fraction(0)) + c
        return Polynomial(acc)

    # -- rendering --------------------------------------------------------
    def sorted_terms(self):
        names = self.variables()
        return sorted(self._terms.items(), key=lambda mc: _grlex_key(mc[0], names), reverse=True)

    def to_infix(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in m]
            if c == 1 and factors:
                coeff = []
            elif c == -1 and factors:
                coeff = ["(-1)"]
            elif c < 0:
                coeff = [f"({c})"]
            else:
                coeff = [str(c)]
            parts.append("*".join(coeff + factors))
        return "+".join(parts)

    def __repr__(self):
        return f"Polynomial({self.to_infix()!r})"

    __str__ = to_infix

    def to_json(self) -> list:
        return [
            {"coeff": f"{c.numerator}/{c.denominator}", "exps": dict(m)}
            for m, c in self.sorted_terms()
        ]

    @classmethod
    def from_json(cls, data: list) -> "Polynomial":
        return cls.from_exponents((Fraction(t["coeff"]), t.get("exps", {})) for t in data)


def _coerce_poly(x):
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return Polynomial.constant(x)
    return NotImplemented


class RationalFunction:
    """Quotient ``num/den`` of two polynomials.  Immutable.

    The stored denominator is monic under graded-lex order; a constant
    denominator is folded into the numerator so polynomials are kept as
    ``p/1``.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = _to_poly(num)
        den = Polynomial.constant(1) if den is None else _to_poly(den)
        if den.is_zero():
            raise DivisionByZeroFunction("denominator is the zero polynomial")
        if num.is_zero():
            den = Polynomial.constant(1)
        elif den.is_constant():
            c = den.constant_value()
            if c != 1:
                num = num.scale(1 / c)
            den = Polynomial.constant(1)
        elif num == den:
            num = den = Polynomial.constant(1)
        else:
            lc = den.leading_term()[1]
            if lc != 1:
                num = num.scale(1 / lc)
                den = den.scale(1 / lc)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, key, value):
        raise AttributeError("RationalFunction is immutable")

    def __reduce__(self):
        return (RationalFunction, (self.num, self.den))

    @classmethod
    def constant(cls, c: Number) -> "RationalFunction":
        return cls(Polynomial.constant(c))

    @classmethod
    def var(cls, name: str) -> "RationalFunction":
        return cls(Polynomial.var(name))

    @classmethod
    def parse(cls, text: str) -> "RationalFunction":
        return parse_expression(text, allow_division=True)

    # -- inspection -------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def is_constant(self) -> bool:
        return self.den.is_one() and self.num.is_constant()

    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.num.variables()) | set(self.den.variables())))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "RationalFunction":
        other = _coerce_rf(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        if other.den.is_one():
            return RationalFunction(self.num + other.num * self.den, self.den)
        if self.den.is_one():
            return RationalFunction(self.num * other.den + other.num, other.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other) -> "RationalFunction":
        other = _coerce_rf(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "RationalFunction":
        return _coerce_rf(other) - self

    def __mul__(self, other) -> "RationalFunction":
        other = _coerce_rf(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return RationalFunction(Polynomial())
        an, ad, bn, bd = self.num, self.den, other.num, other.den
        # cancel identical factors across the product
        if an == bd:
            an = bd = Polynomial.constant(1)
        if bn == ad:
            bn = ad = Polynomial.constant(1)
        return RationalFunction(an * bn, ad * bd)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = _coerce_rf(other)
        if other is NotImplemented:
            return other
        if other.num.is_zero():
            raise DivisionByZeroFunction("division by the zero function")
        return self * RationalFunction(other.den, other.num)

    def __rtruediv__(self, other) -> "RationalFunction":
        return _coerce_rf(other) / self

    def __pow__(self, k: int) -> "RationalFunction":
        if k < 0:
            return RationalFunction(self.den, self.num) ** (-k)
        return RationalFunction(self.num**k, self.den**k)

    # -- equality ---------------------------------------------------------
    def equals(self, other) -> bool:
        """Exact equality as functions, by cross-multiplication."""
        other = _coerce_rf(other)
        if other is NotImplemented:
            return False
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    def __eq__(self, other):
        other = _coerce_rf(other)
        if other is NotImplemented:
            return NotImplemented
        return self.equals(other)

    def structurally_equal(self, other: "RationalFunction") -> bool:
        return self.num == other.num and self.den == other.den

    __hash__ = None  # equality is semantic, so no consistent hash

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Mapping[str, float]) -> float:
        """Value at ``point``.  Inputs are taken as exact binary fractions and
        the arithmetic stays exact; only the final quotient is rounded."""
        exact = {}
        for name in self.variables():
            if name not in point:
                raise MissingParameter(f"no value for parameter {name!r}")
            x = point[name]
            exact[name] = x if isinstance(x, (int, Fraction)) else Fraction(float(x))
        d = self.den.evaluate_exact(exact)
        if abs(d) <= EPSILON_DEN:
            raise DenominatorNearZero(f"denominator {float(d)!r} is within {EPSILON_DEN} of zero")
        return float(self.num.evaluate_exact(exact) / d)

    def evaluate_float(self, point: Mapping[str, float]) -> float:
        """Plain double-precision evaluation; fine for small, well-scaled
        functions such as individual transition probabilities."""
        d = self.den.evaluate(point)
        if abs(d) <= EPSILON_DEN:
            raise DenominatorNearZero(f"denominator {d!r} is within {EPSILON_DEN} of zero")
        return self.num.evaluate(point) / d

    def evaluate_exact(self, point: Mapping[str, Number]) -> Fraction:
        d = self.den.evaluate_exact(point)
        if d == 0:
            raise DenominatorNearZero("denominator vanishes at this point")
        return self.num.evaluate_exact(point) / d

    def compile(self):
        """Return a vectorized float evaluator ``f(point) -> ndarray``.

        ``point`` maps every parameter to a scalar or a 1-D array; arrays must
        share one length.  Much faster than :meth:`evaluate` for trajectories.
        """
        names = self.variables()
        num = _compile_poly(self.num, names)
        den = _compile_poly(self.den, names)

        def fn(point):
            try:
                cols = [np.asarray(point[n], dtype=float) for n in names]
            except KeyError as exc:
                raise MissingParameter(f"no value for parameter {exc.args[0]!r}") from None
            d = den(cols)
            if np.any(np.abs(d) <= EPSILON_DEN):
                raise DenominatorNearZero("denominator near zero in vectorized evaluation")
            return num(cols) / d

        fn.parameters = names
        return fn

    def substitute(self, values: Mapping[str, Number]) -> "RationalFunction":
        return RationalFunction(self.num.substitute(values), self.den.substitute(values))

    def rename(self, mapping: Mapping[str, str]) -> "RationalFunction":
        return RationalFunction(self.num.rename(mapping), self.den.rename(mapping))

    # -- rendering / interchange -----------------------------------------
    def to_infix(self) -> str:
        if self.den.is_one():
            return self.num.to_infix()
        return f"({self.num.to_infix()})/({self.den.to_infix()})"

    __str__ = to_infix

    def __repr__(self):
        return f"RationalFunction({self.to_infix()!r})"

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "RationalFunction":
        return cls(Polynomial.from_json(data["num"]), Polynomial.from_json(data["den"]))


def _to_poly(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial.constant(x)


def _coerce_rf(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    if isinstance(x, (int, Fraction)):
        return RationalFunction.constant(x)
    return NotImplemented


def _compile_poly(p: Polynomial, names: Tuple[str, ...]):
    index = {n: i for i, n in enumerate(names)}
    coeffs = np.array([float(c) for c in p._terms.values()])
    exps = np.zeros((len(coeffs), len(names)), dtype=np.int64)
    for row, m in enumerate(p._terms):
        for n, e in m:
            exps[row, index[n]] = e

    def fn(cols):
        if len(coeffs) == 0:
            return np.zeros(np.broadcast(*cols).shape if cols else ())
        total = 0.0
        for row in range(len(coeffs)):
            t = coeffs[row]
            for j in np.nonzero(exps[row])[0]:
                t = t * cols[j] ** int(exps[row, j])
            total = total + t
        if cols:
            total = total + np.zeros(np.broadcast(*cols).shape)
        return total

    return fn


# -- functional API mirroring the operator overloads ----------------------
def add(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a + b


def sub(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a - b


def mul(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a * b


def div(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a / b


def neg(a: RationalFunction) -> RationalFunction:
    return -a


def evaluate(f: RationalFunction, point: Mapping[str, float]) -> float:
    return f.evaluate(point)


def equals(a: RationalFunction, b: RationalFunction) -> bool:
    return a.equals(b)


# -- infix expression parser ------------------------------------------------
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<id>\\?[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str, line: int = 1, col0: int = 1):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise PrestoSyntaxError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "id" and val.startswith("\\"):
            val = val[1:]
        out.append((kind, val, col0 + start))
        pos = m.end()
    out.append(("eof", "", col0 + n))
    return out


class _ExprParser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('-'|'+') unary | power
    # power  := atom ('^' INT)?
    # atom   := NUMBER | IDENT | '(' expr ')'

    def __init__(self, text, allow_division, resolve, line, col0):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.allow_division = allow_division
        self.resolve = resolve
        self.line = line

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return PrestoSyntaxError(msg, self.line, tok[2])

    def parse(self):
        if self.peek()[0] == "eof":
            raise self.error("empty expression")
        value = self.expr()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                value = value * rhs
            else:
                if not self.allow_division and not (value.is_constant() and rhs.is_constant()):
                    raise self.error("division is only allowed between numeric literals", tok)
                if rhs.is_zero():
                    raise DivisionByZeroFunction("division by zero in expression")
                value = value / rhs
        return value

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            value = self.unary()
            return -value if tok[1] == "-" else value
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                raise self.error("exponent must be a non-negative integer literal", tok)
            base = base ** int(tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return RationalFunction.constant(Fraction(val))
        if kind == "id":
            return self.resolve(val, tok)
        if kind == "op" and val == "(":
            inner = self.expr()
            close = self.take()
            if close[1] != ")":
                raise self.error("expected ')'", close)
            return inner
        raise self.error(f"unexpected token {val!r}" if val else "unexpected end of expression", tok)


def parse_expression(
    text: str,
    allow_division: bool = True,
    known: Iterable[str] | None = None,
    line: int = 1,
    column: int = 1,
) -> RationalFunction:
    """Parse an infix expression over parameters into a RationalFunction.

    Accepts ``+ - * / ^``, parentheses, decimal literals (read exactly) and
    identifiers; a leading backslash on identifiers (``\\alpha``) is dropped.
    With ``allow_division=False`` only literal quotients such as ``1/3`` are
    accepted.
    When ``known`` is given, any other identifier raises UnknownParameter.
    """
    from .errors import UnknownParameter

    known_set = None if known is None else set(known)

    def resolve(name, tok):
        if known_set is not None and name not in known_set:
            raise UnknownParameter(f"undeclared parameter {name!r}", line, tok[2])
        return RationalFunction.var(name)

    return _ExprParser(text, allow_division, resolve, line, column).parse()
