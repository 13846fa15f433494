"""Reader and writer for the ``.pdtmc`` text format.

A small PRISM-flavoured format::

    pdtmc;
    param alpha in [0.7, 0.99];
    const p1 = 0.95;
    init s0;
    state s0;
    state s4 {"picking success"};
    s0 -> s1 : alpha*p1;
    reward "time" { s0 : t0; s1 : t1; }

Transition and reward expressions are polynomials in the declared symbols;
``/`` is only accepted between numeric literals.  The full grammar lives in
``docs/formats.md``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Tuple

from .errors import DuplicateState, PrestoSyntaxError, RowIncomplete, UnknownParameter
from .model import Pdtmc, RewardStructure
from .ratfunc import RationalFunction, parse_expression

__all__ = ["parse_model", "serialize_model", "load_model"]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<num>-?(?:\d+(?:\.\d*)?|\.\d+))
  | (?P<arrow>->)
  | (?P<punct>[;:\[\]{},=])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<other>[-+*/^()])
    """,
    re.VERBOSE,
)

KEYWORDS = {"pdtmc", "param", "const", "init", "state", "reward", "in"}


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.toks: List[Tuple[str, str, int]] = []  # kind, text, offset
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                line, col = self.linecol(pos)
                raise PrestoSyntaxError(f"unexpected character {text[pos]!r}", line, col)
            if m.lastgroup not in ("ws", "comment"):
                self.toks.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def linecol(self, offset: int) -> Tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, col

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None, cls=PrestoSyntaxError):
        tok = tok or self.peek()
        return cls(msg, *self.linecol(tok[2]))

    def expect(self, text):
        t = self.peek()
        if t[1] != text or t[0] == "string":
            raise self.error(f"expected {text!r}, found {t[1]!r}" if t[1] else f"expected {text!r}, found end of file")
        return self.take()

    def ident(self, what="identifier"):
        t = self.take()
        if t[0] != "ident":
            raise self.error(f"expected {what}", t)
        return t

    def number(self) -> Fraction:
        t = self.take()
        if t[0] != "num":
            raise self.error("expected a number", t)
        return Fraction(t[1])

    def expression_until_semicolon(self, known) -> RationalFunction:
        start = self.peek()
        while self.peek()[1] != ";" and self.peek()[0] != "eof":
            if self.peek()[0] in ("punct", "string", "arrow") and self.peek()[1] != ";":
                raise self.error(f"unexpected {self.peek()[1]!r} in expression")
            self.take()
        end = self.peek()
        if end[0] == "eof":
            raise self.error("expected ';' after expression", end)
        src = self.text[start[2]:end[2]]
        line, col = self.linecol(start[2])
        if "\n" in src:
            # multi-line expressions: report errors relative to the first line
            src = src.replace("\n", " ")
        expr = _parse_poly_expr(src, known, line, col)
        self.take()
        return expr


def _parse_poly_expr(src: str, known, line: int, col: int) -> RationalFunction:
    try:
        return parse_expression(src, allow_division=False, known=known, line=line, column=col)
    except ZeroDivisionError:
        raise PrestoSyntaxError("division by zero", line, col) from None


def _check_polynomial(f: RationalFunction, line, col) -> RationalFunction:
    if not f.is_polynomial():
        raise PrestoSyntaxError("division is only allowed between numeric literals", line, col)
    return f


def parse_model(text: str) -> Pdtmc:
    """Parse ``.pdtmc`` text into a :class:`Pdtmc` (reward structures included)."""
    sc = _Scanner(text)
    sc.expect("pdtmc")
    sc.expect(";")

    params: Dict[str, Tuple[float, float]] = {}
    constants: Dict[str, Fraction] = {}
    states: List[str] = []
    labels: Dict[str, frozenset] = {}
    trans: Dict[str, Dict[str, RationalFunction]] = {}
    trans_pos: Dict[str, Tuple[int, int]] = {}
    rewards: Dict[str, RewardStructure] = {}
    init = None
    pending_targets = []

    def declare_symbol(tok):
        name = tok[1]
        if name in params or name in constants or name in KEYWORDS:
            raise sc.error(f"symbol {name!r} declared twice", tok)
        return name

    while sc.peek()[0] != "eof":
        t = sc.peek()
        word = t[1] if t[0] == "ident" else None
        if word == "param":
            sc.take()
            name = declare_symbol(sc.ident("parameter name"))
            sc.expect("in")
            sc.expect("[")
            lo = sc.number()
            sc.expect(",")
            hi = sc.number()
            sc.expect("]")
            sc.expect(";")
            if lo > hi:
                raise sc.error(f"empty domain for {name!r}", t)
            params[name] = (float(lo), float(hi))
        elif word == "const":
            sc.take()
            name = declare_symbol(sc.ident("constant name"))
            sc.expect("=")
            constants[name] = sc.number()
            sc.expect(";")
        elif word == "init":
            sc.take()
            tok = sc.ident("state name")
            if init is not None:
                raise sc.error("initial state declared twice", tok)
            init = tok
            sc.expect(";")
        elif word == "state":
            sc.take()
            tok = sc.ident("state name")
            if tok[1] in states:
                raise sc.error(f"state {tok[1]!r} declared twice", tok, DuplicateState)
            states.append(tok[1])
            labs = []
            if sc.peek()[1] == "{":
                sc.take()
                while True:
                    lab = sc.take()
                    if lab[0] != "string":
                        raise sc.error("labels must be quoted strings", lab)
                    labs.append(lab[1][1:-1])
                    if sc.peek()[1] == ",":
                        sc.take()
                        continue
                    sc.expect("}")
                    break
            if labs:
                labels[tok[1]] = frozenset(labs)
            sc.expect(";")
        elif word == "reward":
            sc.take()
            name_tok = sc.take()
            if name_tok[0] != "string":
                raise sc.error("reward name must be a quoted string", name_tok)
            rname = name_tok[1][1:-1]
            if rname in rewards:
                raise sc.error(f"reward structure {rname!r} declared twice", name_tok)
            sc.expect("{")
            entries: Dict[str, RationalFunction] = {}
            known = set(params) | set(constants)
            while sc.peek()[1] != "}":
                st = sc.ident("state name")
                if st[1] not in states:
                    raise sc.error(f"undeclared state {st[1]!r}", st)
                if st[1] in entries:
                    raise sc.error(f"reward for {st[1]!r} given twice", st)
                sc.expect(":")
                line, col = sc.linecol(sc.peek()[2])
                entries[st[1]] = _check_polynomial(sc.expression_until_semicolon(known), line, col)
            sc.expect("}")
            if sc.peek()[1] == ";":
                sc.take()
            rewards[rname] = RewardStructure(rname, entries)
        elif t[0] == "ident" and sc.toks[sc.i + 1][0] == "arrow":
            src = sc.take()
            sc.take()
            dst = sc.ident("target state")
            sc.expect(":")
            if src[1] not in states:
                raise sc.error(f"undeclared state {src[1]!r}", src)
            pending_targets.append(dst)
            row = trans.setdefault(src[1], {})
            if dst[1] in row:
                raise sc.error(f"duplicate transition {src[1]} -> {dst[1]}", dst)
            line, col = sc.linecol(sc.peek()[2])
            f = _check_polynomial(sc.expression_until_semicolon(set(params) | set(constants)), line, col)
            row[dst[1]] = f
            trans_pos.setdefault(src[1], sc.linecol(src[2]))
        else:
            raise sc.error(f"unexpected {t[1]!r}" if t[1] else "unexpected end of file", t)

    for dst in pending_targets:
        if dst[1] not in states:
            raise sc.error(f"undeclared state {dst[1]!r}", dst)
    if not states:
        raise PrestoSyntaxError("model declares no states", 1, 1)
    if init is not None and init[1] not in states:
        raise sc.error(f"undeclared initial state {init[1]!r}", init)
    for s in states:
        if not trans.get(s):
            raise RowIncomplete(f"state {s!r} has no outgoing transitions", None, None)

    return Pdtmc(
        states=tuple(states),
        init=init[1] if init is not None else states[0],
        transitions=trans,
        labels=labels,
        params=params,
        constants=constants,
        rewards=rewards,
    )


def load_model(path) -> Pdtmc:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def _fmt_num(x) -> str:
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    fl = float(f)
    if Fraction(repr(fl)) == f:
        return repr(fl)
    return f"{f.numerator}/{f.denominator}"


def serialize_model(m: Pdtmc) -> str:
    lines = ["pdtmc;", ""]
    for name, (lo, hi) in m.params.items():
        lines.append(f"param {name} in [{_fmt_num(repr(lo))}, {_fmt_num(repr(hi))}];")
    for name, value in m.constants.items():
        lines.append(f"const {name} = {_fmt_num(value)};")
    lines.append("")
    lines.append(f"init {m.init};")
    for s in m.states:
        labs = sorted(m.label_set(s))
        if labs:
            lines.append(f"state {s} {{{', '.join(chr(34) + l + chr(34) for l in labs)}}};")
        else:
            lines.append(f"state {s};")
    lines.append("")
    for s in m.states:
        for t, f in m.row(s).items():
            lines.append(f"{s} -> {t} : {f.to_infix()};")
    for name, r in m.rewards.items():
        lines.append("")
        lines.append(f'reward "{name}" {{')
        for s, f in r.rewards.items():
            lines.append(f"  {s} : {f.to_infix()};")
        lines.append("}")
    return "\n".join(lines) + "\n"
