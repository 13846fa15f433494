"""Parametric model checking of pDTMCs.

Unbounded reachability and reachability rewards are computed by state
elimination; bounded operators by k-step vector/matrix recurrences.  The
numeric oracle for instantiated chains lives in :mod:`presto.oracle`.

During elimination each row ``u`` is kept as numerators over one shared
row denominator ``D_u`` (``P(u, v) = n_uv / D_u``, reward ``r(u) = a_u /
D_u``).  Eliminating ``s`` from ``u`` then needs no division at all::

    L_s  = D_s - n_ss                       # 1 - P(s, s), times D_s
    D_u' = D_u * L_s
    n_uv' = n_uv * L_s + n_us * n_sv
    a_u'  = a_u  * L_s + n_us * a_s

which is the usual ``P(u,v) + P(u,s) P(s,v) / (1 - P(s,s))`` rule with the
``D_s`` factors cancelled by hand.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import warnings

import numpy as np
from sympy import QQ
from sympy.polys.rings import PolyRing

from .errors import (
    EmptyTarget,
    EngineError,
    RewardDivergence,
    UnsupportedProperty,
)
from .model import Pdtmc, RewardStructure
from .properties import (
    And,
    Atom,
    Cumulative,
    Eventually,
    Instantaneous,
    Next,
    Not,
    ProbQuery,
    Query,
    Reach,
    Requirement,
    RewardQuery,
    StateFormula,
    SteadyState,
    TrueF,
    Until,
    format_query,
)
from .ratfunc import Polynomial, RationalFunction

TARGET = object()  # column key for the merged target sink

REWARD_CHECK_SAMPLES = 20
REWARD_CHECK_TOL = 1e-9


class UnreachableTargetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PmcExpression:
    requirement_id: str
    function: RationalFunction
    params: Tuple[str, ...] = ()
    property: str = ""

    def evaluate(self, point: Mapping[str, float]) -> float:
        return self.function.evaluate(point)

    def compiled(self):
        """Cached vectorized evaluator (see :meth:`RationalFunction.compile`)."""
        fn = self.__dict__.get("_compiled")
        if fn is None:
            fn = self.function.compile()
            object.__setattr__(self, "_compiled", fn)
        return fn

    def to_json(self) -> dict:
        return {
            "requirement": self.requirement_id,
            "property": self.property,
            "params": list(self.params),
            "function": self.function.to_json(),
            "infix": self.function.to_infix(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PmcExpression":
        f = RationalFunction.from_json(data["function"])
        return cls(data["requirement"], f, tuple(data.get("params", f.variables())), data.get("property", ""))


def _expression(rid: str, f: RationalFunction, prop: str = "") -> PmcExpression:
    return PmcExpression(rid, f, f.variables(), prop)


# -- state formulas ---------------------------------------------------------
def satisfying(m: Pdtmc, f: StateFormula) -> Set[str]:
    """States of ``m`` satisfying a propositional state formula."""
    if isinstance(f, TrueF):
        return set(m.states)
    if isinstance(f, Atom):
        return {s for s in m.states if f.label in m.label_set(s)}
    if isinstance(f, Not):
        return set(m.states) - satisfying(m, f.arg)
    if isinstance(f, And):
        return satisfying(m, f.left) & satisfying(m, f.right)
    raise UnsupportedProperty(f"unsupported state formula {f!r}")


def _as_states(m: Pdtmc, target) -> Set[str]:
    if isinstance(target, (TrueF, Atom, Not, And)):
        return satisfying(m, target)
    if isinstance(target, str):
        return satisfying(m, Atom(target))
    if isinstance(target, _StateSet):
        return set(target.states)
    return set(target)


# -- graph helpers ----------------------------------------------------------
def _successors(m: Pdtmc) -> Dict[str, Set[str]]:
    return {s: {t for t, f in m.row(s).items() if not f.is_zero()} for s in m.states}


def _can_reach(m: Pdtmc, target: Set[str], through: Set[str]) -> Set[str]:
    """States that reach ``target`` via a path whose inner states are in ``through``."""
    pred: Dict[str, Set[str]] = {s: set() for s in m.states}
    for s, succ in _successors(m).items():
        for t in succ:
            pred[t].add(s)
    seen = set(target)
    stack = list(target)
    while stack:
        t = stack.pop()
        for s in pred[t]:
            if s not in seen and s in through:
                seen.add(s)
                stack.append(s)
    return seen


def _forward(m: Pdtmc, start: str, stop: Set[str]) -> Set[str]:
    succ = _successors(m)
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        if s in stop:
            continue
        for t in succ[s]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


# -- row representation -----------------------------------------------------
class _Bridge:
    """Moves polynomials between :class:`Polynomial` and a sympy sparse ring.

    Elimination runs in the ring because it offers multivariate GCDs; the
    results come back as ordinary presto polynomials.
    """

    def __init__(self, names: Sequence[str]):
        self.names = tuple(names) or ("_unused",)
        self.ring = PolyRing(self.names, QQ)
        self.pos = {n: i for i, n in enumerate(self.names)}
        self.zero = self.ring.zero
        self.one = self.ring.one

    def to_ring(self, p: Polynomial):
        data = {}
        width = len(self.names)
        for m, c in p.items():
            exps = [0] * width
            for n, e in m:
                exps[self.pos[n]] = e
            data[tuple(exps)] = QQ(c.numerator, c.denominator)
        return self.ring.from_dict(data) if data else self.ring.zero

    def from_ring(self, q) -> Polynomial:
        terms = {}
        for exps, c in q.items():
            m = tuple((self.names[i], e) for i, e in enumerate(exps) if e)
            terms[tuple(sorted(m))] = Fraction(int(c.numerator), int(c.denominator))
        return Polynomial(terms)


def _joint_gcd(polys):
    g = None
    for p in polys:
        if not p:
            continue
        g = p if g is None else g.gcd(p)
        if g.is_ground:
            return None
    return g


class _Row:
    __slots__ = ("den", "nums", "rew")

    def __init__(self, den, nums: Dict, rew):
        self.den = den
        self.nums = nums
        self.rew = rew

    def normalize(self):
        """Cancel the factor common to every entry of the row (the row is an
        equation, so scaling it changes nothing) and make ``den`` monic."""
        g = _joint_gcd([self.den, self.rew, *self.nums.values()])
        if g is not None:
            self.den = self.den.exquo(g)
            self.rew = self.rew.exquo(g) if self.rew else self.rew
            self.nums = {k: v.exquo(g) for k, v in self.nums.items()}
        lc = self.den.LC
        if lc != 1:
            inv = 1 / lc
            self.den = self.den * inv
            self.rew = self.rew * inv
            self.nums = {k: v * inv for k, v in self.nums.items()}


def _build_rows(
    m: Pdtmc,
    states: Iterable[str],
    target: Set[str],
    rwd: Optional[RewardStructure],
    bridge: _Bridge,
) -> Dict[str, _Row]:
    rows: Dict[str, _Row] = {}
    keep = set(states)
    for s in states:
        entries: List[Tuple[object, RationalFunction]] = []
        for t, f in m.row(s).items():
            if f.is_zero():
                continue
            if t in target:
                entries.append((TARGET, f))
            elif t in keep:
                entries.append((t, f))
            # transitions into states that cannot reach the target contribute 0
        r = rwd.reward(s) if rwd is not None else RationalFunction.constant(0)
        dens: List[Polynomial] = []
        for f in [f for _, f in entries] + [r]:
            if not f.den.is_one() and all(f.den != d for d in dens):
                dens.append(f.den)

        def over_common(f: RationalFunction):
            out = bridge.to_ring(f.num)
            for d in dens:
                if d != f.den:
                    out = out * bridge.to_ring(d)
            return out

        den = bridge.one
        for d in dens:
            den = den * bridge.to_ring(d)
        nums: Dict = {}
        for key, f in entries:
            p = over_common(f)
            nums[key] = nums[key] + p if key in nums else p
        nums = {k: v for k, v in nums.items() if v}
        row = _Row(den, nums, over_common(r) if not r.is_zero() else bridge.zero)
        row.normalize()
        rows[s] = row
    return rows


def _default_order(rows: Dict[str, _Row], protected: Set[str], index: Dict[str, int]):
    """Pick the next state to eliminate: fewest in*out connections, then index."""
    incoming: Dict[str, int] = {s: 0 for s in rows}
    for u, row in rows.items():
        for v in row.nums:
            if v is not TARGET and v != u and v in incoming:
                incoming[v] += 1
    best = None
    for s, row in rows.items():
        if s in protected:
            continue
        out = sum(1 for v in row.nums if v != s)
        key = (incoming[s] * out, index[s])
        if best is None or key < best[0]:
            best = (key, s)
    return None if best is None else best[1]


def _eliminate(rows: Dict[str, _Row], s: str) -> None:
    row_s = rows.pop(s)
    n_ss = row_s.nums.pop(s, None)
    loop = row_s.den - n_ss if n_ss is not None else row_s.den
    if not loop:
        raise EngineError(f"state {s!r} is a trap (self-loop probability is 1)")
    for u, row_u in rows.items():
        n_us = row_u.nums.pop(s, None)
        if n_us is None:
            continue
        new_nums = {}
        for v, n_uv in row_u.nums.items():
            new_nums[v] = n_uv * loop
        for v, n_sv in row_s.nums.items():
            add = n_us * n_sv
            new_nums[v] = new_nums[v] + add if v in new_nums else add
        row_u.nums = {v: p for v, p in new_nums.items() if p}
        row_u.rew = row_u.rew * loop + n_us * row_s.rew
        row_u.den = row_u.den * loop
        row_u.normalize()


def _solve_by_elimination(
    m: Pdtmc,
    target: Set[str],
    avoid: Set[str],
    rwd: Optional[RewardStructure],
    order: Optional[Sequence[str]] = None,
) -> Tuple[RationalFunction, RationalFunction]:
    """Return ``(reach probability, expected reward)`` from the initial state.

    ``avoid`` states are treated as absorbing failures (for ``phi1 U phi2``).
    """
    inner = set(m.states) - target - avoid
    good = _can_reach(m, target, inner)
    live = _forward(m, m.init, set(m.states) - (good - target)) & (good - target)
    index = m.index
    ordered_live = sorted(live, key=index.__getitem__)
    names = set()
    for s in ordered_live:
        for f in m.row(s).values():
            names.update(f.variables())
        if rwd is not None:
            names.update(rwd.reward(s).variables())
    bridge = _Bridge(sorted(names))
    rows = _build_rows(m, ordered_live, target, rwd, bridge)
    protected = {m.init}
    if order is not None:
        for s in order:
            if s in rows and s not in protected:
                _eliminate(rows, s)
    while True:
        s = _default_order(rows, protected, index)
        if s is None:
            break
        _eliminate(rows, s)
    row = rows[m.init]
    loop = row.den - row.nums.get(m.init, bridge.zero)
    if not loop:
        raise EngineError("initial state cannot leave itself")
    return _quotient(bridge, row.nums.get(TARGET, bridge.zero), loop), _quotient(bridge, row.rew, loop)


def _quotient(bridge: _Bridge, num, den) -> RationalFunction:
    if num:
        _, num, den = num.cofactors(den)
    return RationalFunction(bridge.from_ring(num), bridge.from_ring(den))


# -- public checking API ----------------------------------------------------
def check_until(
    m: Pdtmc,
    left: StateFormula,
    right: StateFormula,
    rid: str = "",
    order: Optional[Sequence[str]] = None,
) -> PmcExpression:
    target = _as_states(m, right)
    prop = ""
    if not target:
        raise EmptyTarget("no state satisfies the target formula")
    if m.init in target:
        return _expression(rid, RationalFunction.constant(1), prop)
    allowed = _as_states(m, left)
    avoid = set(m.states) - allowed - target
    if m.init in avoid:
        return _expression(rid, RationalFunction.constant(0), prop)
    inner = set(m.states) - target - avoid
    if m.init not in _can_reach(m, target, inner):
        warnings.warn("target is unreachable from the initial state", UnreachableTargetWarning)
        return _expression(rid, RationalFunction.constant(0), prop)
    prob, _ = _solve_by_elimination(m, target, avoid, None, order)
    return _expression(rid, prob, prop)


def check_reachability(
    m: Pdtmc,
    target,
    rid: str = "",
    order: Optional[Sequence[str]] = None,
) -> PmcExpression:
    """Probability of eventually reaching ``target`` (a state formula, label
    or state collection) from the initial state."""
    return check_until(m, TrueF(), _formula(target), rid, order)


def _formula(target) -> StateFormula:
    if isinstance(target, (TrueF, Atom, Not, And)):
        return target
    if isinstance(target, str):
        return Atom(target)
    return _StateSet(frozenset(target))


@dataclass(frozen=True)
class _StateSet:
    states: frozenset


def _reach_prob_numeric(m: Pdtmc, target: Set[str], rng) -> float:
    from .oracle import reach_probabilities

    v = m.sample_valuation(rng)
    return reach_probabilities(m.instantiate(v), [m.index[s] for s in target])[m.index[m.init]]


def check_reachability_reward(
    m: Pdtmc,
    rwd: Union[RewardStructure, str],
    target,
    rid: str = "",
    order: Optional[Sequence[str]] = None,
    samples: int = REWARD_CHECK_SAMPLES,
    seed: int = 0,
) -> PmcExpression:
    """Expected reward cumulated until the first visit to ``target``."""
    if isinstance(rwd, str):
        rwd = m.reward_structure(rwd)
    target_set = _as_states(m, _formula(target))
    if not target_set:
        raise EmptyTarget("no state satisfies the target formula")
    if m.init in target_set:
        return _expression(rid, RationalFunction.constant(0))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        p = _reach_prob_numeric(m, target_set, rng)
        if p < 1 - REWARD_CHECK_TOL:
            raise RewardDivergence(
                f"target reached with probability {p:.6g} < 1; expected reward is infinite"
            )
    _, reward = _solve_by_elimination(m, target_set, set(), rwd, order)
    return _expression(rid, reward)


def _init_state(m: Pdtmc, initial: Optional[str]) -> str:
    return m.init if initial is None else initial


def _step(m: Pdtmc, vec: Dict[str, RationalFunction]) -> Dict[str, RationalFunction]:
    """``(P x)(s) = sum_t P(s,t) x(t)``."""
    out = {}
    for s in m.states:
        acc = RationalFunction.constant(0)
        for t, f in m.row(s).items():
            x = vec.get(t)
            if x is not None and not x.is_zero():
                acc = acc + f * x
        out[s] = acc
    return out


def check_next(m: Pdtmc, phi: StateFormula, rid: str = "", initial: Optional[str] = None) -> PmcExpression:
    sat = satisfying(m, phi)
    s0 = _init_state(m, initial)
    acc = RationalFunction.constant(0)
    for t, f in m.row(s0).items():
        if t in sat:
            acc = acc + f
    return _expression(rid, acc)


def check_bounded_until(
    m: Pdtmc, left: StateFormula, right: StateFormula, k: int, rid: str = "", initial: Optional[str] = None
) -> PmcExpression:
    if k < 1:
        raise EngineError("step bound must be at least 1")
    sat2 = _as_states(m, right)
    sat1 = _as_states(m, left)
    one, zero = RationalFunction.constant(1), RationalFunction.constant(0)
    x = {s: (one if s in sat2 else zero) for s in m.states}
    for _ in range(k):
        px = _step(m, x)
        x = {s: one if s in sat2 else (px[s] if s in sat1 else zero) for s in m.states}
    return _expression(rid, x[_init_state(m, initial)])


def check_cumulative_reward(
    m: Pdtmc, rwd: Union[RewardStructure, str], k: int, rid: str = "", initial: Optional[str] = None
) -> PmcExpression:
    """Expected state reward collected over steps ``0 .. k-1``."""
    if k < 1:
        raise EngineError("step bound must be at least 1")
    if isinstance(rwd, str):
        rwd = m.reward_structure(rwd)
    c = {s: RationalFunction.constant(0) for s in m.states}
    for _ in range(k):
        pc = _step(m, c)
        c = {s: rwd.reward(s) + pc[s] for s in m.states}
    return _expression(rid, c[_init_state(m, initial)])


def check_instantaneous_reward(
    m: Pdtmc, rwd: Union[RewardStructure, str], k: int, rid: str = "", initial: Optional[str] = None
) -> PmcExpression:
    """Expected state reward at step ``k``."""
    if k < 1:
        raise EngineError("step bound must be at least 1")
    if isinstance(rwd, str):
        rwd = m.reward_structure(rwd)
    x = {s: rwd.reward(s) for s in m.states}
    for _ in range(k):
        x = _step(m, x)
    return _expression(rid, x[_init_state(m, initial)])


def check(m: Pdtmc, query: Union[Query, Requirement], rid: str = "") -> PmcExpression:
    """Dispatch a parsed query (or requirement) to the matching algorithm."""
    if isinstance(query, Requirement):
        rid = rid or query.id
        query = query.query
    prop = format_query(query)
    if isinstance(query, ProbQuery):
        p = query.path
        if isinstance(p, Next):
            e = check_next(m, p.arg, rid)
        elif isinstance(p, Eventually):
            u = p.as_until()
            e = (check_until(m, u.left, u.right, rid) if u.bound is None
                 else check_bounded_until(m, u.left, u.right, u.bound, rid))
        elif isinstance(p, Until):
            e = (check_until(m, p.left, p.right, rid) if p.bound is None
                 else check_bounded_until(m, p.left, p.right, p.bound, rid))
        else:
            raise UnsupportedProperty(f"unsupported path formula {p!r}")
    elif isinstance(query, RewardQuery):
        rwd = m.reward_structure(query.reward)
        kind = query.kind
        if isinstance(kind, Reach):
            e = check_reachability_reward(m, rwd, kind.target, rid)
        elif isinstance(kind, Cumulative):
            e = check_cumulative_reward(m, rwd, kind.k, rid)
        elif isinstance(kind, Instantaneous):
            e = check_instantaneous_reward(m, rwd, kind.k, rid)
        elif isinstance(kind, SteadyState):
            raise UnsupportedProperty("steady-state reward queries (R=? [ S ]) are not supported")
        else:
            raise UnsupportedProperty(f"unsupported reward query {kind!r}")
    else:
        raise UnsupportedProperty(f"unsupported query {query!r}")
    return PmcExpression(e.requirement_id, e.function, e.params, prop)


def check_all(m: Pdtmc, requirements: Sequence[Requirement]) -> List[PmcExpression]:
    return [check(m, r) for r in requirements]
