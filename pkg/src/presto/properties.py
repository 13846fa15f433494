"""PCTL property ASTs, requirements, and their text parser/serializer.

Property syntax (one requirement per line, ``#`` starts a comment)::

    R1: P=? [ F "picking success" ] >= 0.8
    R2: R{"time"}=? [ F "done" ] <= 30

State formulas combine atomic propositions with ``true``, ``!`` and ``&``.
Path formulas are ``X phi``, ``phi U phi``, ``phi U<=k phi``, ``F phi`` and
``F<=k phi``; reward queries take ``F phi``, ``C<=k``, ``I=k`` or ``S``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Union

from .errors import PrestoSyntaxError, UnboundComparator


# -- state formulas ---------------------------------------------------------
@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Atom:
    label: str


@dataclass(frozen=True)
class Not:
    arg: "StateFormula"


@dataclass(frozen=True)
class And:
    left: "StateFormula"
    right: "StateFormula"


StateFormula = Union[TrueF, Atom, Not, And]


# -- path formulas ----------------------------------------------------------
@dataclass(frozen=True)
class Next:
    arg: StateFormula


@dataclass(frozen=True)
class Until:
    left: StateFormula
    right: StateFormula
    bound: Optional[int] = None


@dataclass(frozen=True)
class Eventually:
    """``F phi``, shorthand for ``true U phi`` (kept distinct for printing)."""

    arg: StateFormula
    bound: Optional[int] = None

    def as_until(self) -> Until:
        return Until(TrueF(), self.arg, self.bound)


PathFormula = Union[Next, Until, Eventually]


# -- reward kinds -----------------------------------------------------------
@dataclass(frozen=True)
class Reach:
    target: StateFormula


@dataclass(frozen=True)
class Cumulative:
    k: int


@dataclass(frozen=True)
class Instantaneous:
    k: int


@dataclass(frozen=True)
class SteadyState:
    pass


RewardKind = Union[Reach, Cumulative, Instantaneous, SteadyState]


@dataclass(frozen=True)
class ProbQuery:
    path: PathFormula


@dataclass(frozen=True)
class RewardQuery:
    reward: str
    kind: RewardKind


Query = Union[ProbQuery, RewardQuery]


@dataclass(frozen=True)
class Requirement:
    id: str
    query: Query
    comparator: str  # ">=" or "<="
    threshold: float

    def satisfied(self, value: float) -> bool:
        return value >= self.threshold if self.comparator == ">=" else value <= self.threshold

    def violated(self, value):
        """Vectorizable violation test (strict comparator failure)."""
        return value < self.threshold if self.comparator == ">=" else value > self.threshold


# -- serialization ----------------------------------------------------------
def format_state(f: StateFormula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Atom):
        return '"' + f.label + '"'
    if isinstance(f, Not):
        inner = format_state(f.arg)
        if isinstance(f.arg, And):
            inner = f"({inner})"
        return "!" + inner
    if isinstance(f, And):
        right = format_state(f.right)
        if isinstance(f.right, And):
            right = f"({right})"
        return f"{format_state(f.left)} & {right}"
    raise TypeError(f"not a state formula: {f!r}")


def _bound(k: Optional[int]) -> str:
    return "" if k is None else f"<={k}"


def format_path(p: PathFormula) -> str:
    if isinstance(p, Next):
        return "X " + _operand(p.arg)
    if isinstance(p, Eventually):
        return f"F{_bound(p.bound)} " + _operand(p.arg)
    if isinstance(p, Until):
        return f"{_operand(p.left)} U{_bound(p.bound)} {_operand(p.right)}"
    raise TypeError(f"not a path formula: {p!r}")


def _operand(f: StateFormula) -> str:
    s = format_state(f)
    return f"({s})" if isinstance(f, And) else s


def format_query(q: Query) -> str:
    if isinstance(q, ProbQuery):
        return f"P=? [ {format_path(q.path)} ]"
    k = q.kind
    if isinstance(k, Reach):
        body = "F " + _operand(k.target)
    elif isinstance(k, Cumulative):
        body = f"C<={k.k}"
    elif isinstance(k, Instantaneous):
        body = f"I={k.k}"
    else:
        body = "S"
    return f'R{{"{q.reward}"}}=? [ {body} ]'


def format_requirement(r: Requirement) -> str:
    return f"{r.id}: {format_query(r.query)} {r.comparator} {r.threshold!r}"


def format_properties(reqs: List[Requirement]) -> str:
    return "".join(format_requirement(r) + "\n" for r in reqs)


# -- parsing ----------------------------------------------------------------
_TOKENS = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#.*)
  | (?P<string>"[^"\n]*")
  | (?P<num>-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<op>=\?|<=|>=|≥|≤|[\[\]{}()!&=:<>])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int) -> List[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKENS.match(line, pos)
        if not m:
            raise PrestoSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            text = m.group()
            if text == "≥":
                text = ">="
            elif text == "≤":
                text = "<="
            toks.append(_Tok(kind, text, pos + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", len(line) + 1))
    return toks


class _PropParser:
    def __init__(self, line: str, lineno: int):
        self.toks = _tokenize(line, lineno)
        self.i = 0
        self.lineno = lineno

    def peek(self, ahead=0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return PrestoSyntaxError(msg, self.lineno, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind == "string":
            found = repr(t.text) if t.text else "end of line"
            raise self.error(f"expected {text!r}, found {found}")
        return self.take()

    def at(self, text, kind=None):
        t = self.peek()
        return t.text == text and t.kind != "string" and (kind is None or t.kind == kind)

    def is_empty(self):
        return self.peek().kind == "eof"

    # requirement := (IDENT ':')? query (('>='|'<=') NUMBER)
    def requirement(self, default_id: str, require_bound: bool = True) -> Requirement:
        rid = default_id
        if self.peek().kind == "ident" and self.peek(1).text == ":":
            rid = self.take().text
            self.take()
        query = self.query()
        if self.peek().kind == "eof":
            if require_bound:
                raise UnboundComparator(f"requirement {rid} has no threshold", self.lineno, self.peek().col)
            return Requirement(rid, query, ">=", float("-inf"))
        cmp_tok = self.take()
        if cmp_tok.text not in (">=", "<="):
            raise self.error(f"expected '>=' or '<=', found {cmp_tok.text!r}", cmp_tok)
        num = self.take()
        if num.kind != "num":
            if num.kind == "eof":
                raise UnboundComparator(f"requirement {rid} has a comparator but no threshold", self.lineno, num.col)
            raise self.error("threshold must be a number", num)
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r} after threshold")
        value = float(num.text)
        if value != value or value in (float("inf"), float("-inf")):
            raise self.error("threshold must be finite", num)
        return Requirement(rid, query, cmp_tok.text, value)

    def query(self) -> Query:
        t = self.take()
        if t.kind == "ident" and t.text == "P":
            self.expect("=?")
            self.expect("[")
            path = self.path()
            self.expect("]")
            return ProbQuery(path)
        if t.kind == "ident" and t.text == "R":
            self.expect("{")
            name = self.take()
            if name.kind != "string":
                raise self.error("reward structure name must be a quoted string", name)
            self.expect("}")
            self.expect("=?")
            self.expect("[")
            kind = self.reward_kind()
            self.expect("]")
            return RewardQuery(name.text[1:-1], kind)
        raise self.error("expected 'P=?' or 'R{...}=?'", t)

    def _int_bound(self) -> int:
        t = self.take()
        if t.kind != "num" or not re.fullmatch(r"\d+", t.text):
            raise self.error("step bound must be a positive integer", t)
        k = int(t.text)
        if k < 1:
            raise self.error("step bound must be at least 1", t)
        return k

    def _opt_bound(self) -> Optional[int]:
        if self.at("<="):
            self.take()
            return self._int_bound()
        return None

    def reward_kind(self) -> RewardKind:
        t = self.take()
        if t.kind == "ident":
            if t.text == "F":
                return Reach(self.state())
            if t.text == "C":
                self.expect("<=")
                return Cumulative(self._int_bound())
            if t.text == "I":
                self.expect("=")
                return Instantaneous(self._int_bound())
            if t.text == "S":
                return SteadyState()
        raise self.error("expected 'F', 'C<=k', 'I=k' or 'S'", t)

    def path(self) -> PathFormula:
        t = self.peek()
        if t.kind == "ident" and t.text == "X":
            self.take()
            return Next(self.state())
        if t.kind == "ident" and t.text == "F":
            self.take()
            bound = self._opt_bound()
            return Eventually(self.state(), bound)
        left = self.state()
        if not self.at("U", "ident"):
            raise self.error("expected 'U' in path formula")
        self.take()
        bound = self._opt_bound()
        right = self.state()
        return Until(left, right, bound)

    # state := unary ('&' unary)*
    def state(self) -> StateFormula:
        f = self.unary()
        while self.at("&"):
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> StateFormula:
        if self.at("!"):
            self.take()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> StateFormula:
        t = self.take()
        if t.kind == "string":
            return Atom(t.text[1:-1])
        if t.kind == "ident" and t.text == "true":
            return TrueF()
        if t.kind == "ident" and t.text == "false":
            return Not(TrueF())
        if t.kind == "op" and t.text == "(":
            f = self.state()
            self.expect(")")
            return f
        if t.kind == "ident" and t.text in ("P", "R"):
            raise self.error("nested probabilistic or reward operators are not supported", t)
        raise self.error("expected a state formula", t)


def parse_property(text: str, require_bound: bool = False) -> Requirement:
    """Parse a single query, optionally followed by a comparator and threshold."""
    p = _PropParser(text, 1)
    if p.is_empty():
        raise PrestoSyntaxError("empty property", 1, 1)
    return p.requirement("R1", require_bound=require_bound)


def parse_query(text: str) -> Query:
    p = _PropParser(text, 1)
    q = p.query()
    if not p.is_empty():
        raise p.error(f"unexpected {p.peek().text!r}")
    return q


def parse_state_formula(text: str) -> StateFormula:
    p = _PropParser(text, 1)
    f = p.state()
    if not p.is_empty():
        raise p.error(f"unexpected {p.peek().text!r}")
    return f


def parse_properties(text: str) -> List[Requirement]:
    """Parse a properties file into requirements (each needs a threshold)."""
    reqs: List[Requirement] = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        p = _PropParser(line, lineno)
        if p.is_empty():
            continue
        req = p.requirement(f"R{len(reqs) + 1}")
        if req.id in seen:
            raise PrestoSyntaxError(f"duplicate requirement id {req.id!r}", lineno, 1)
        seen.add(req.id)
        reqs.append(req)
    if not reqs:
        raise PrestoSyntaxError("no requirements found", 1, 1)
    return reqs
