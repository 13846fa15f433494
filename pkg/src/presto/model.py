"""Parametric DTMCs, reward structures, valuations and model validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from .ratfunc import RationalFunction

Interval = Tuple[float, float]

ROW_TOL = 1e-9
REWARD_TOL = 1e-9


@dataclass(frozen=True)
class RewardStructure:
    name: str
    rewards: Mapping[str, RationalFunction]

    def reward(self, state: str) -> RationalFunction:
        return self.rewards.get(state, RationalFunction.constant(0))


@dataclass(frozen=True)
class Pdtmc:
    """A parametric discrete-time Markov chain.

    ``transitions[s][t]`` is the probability of moving from ``s`` to ``t``.
    ``params`` holds the monitored parameters with their real interval
    domains; ``constants`` are symbols fixed at load time (they stay symbolic
    in PMC expressions and are bound when evaluating).
    """

    states: Tuple[str, ...]
    init: str
    transitions: Mapping[str, Mapping[str, RationalFunction]]
    labels: Mapping[str, FrozenSet[str]] = field(default_factory=dict)
    params: Mapping[str, Interval] = field(default_factory=dict)
    constants: Mapping[str, Fraction] = field(default_factory=dict)
    rewards: Mapping[str, RewardStructure] = field(default_factory=dict)

    @property
    def index(self) -> Dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    def row(self, state: str) -> Mapping[str, RationalFunction]:
        return self.transitions.get(state, {})

    def label_set(self, state: str) -> FrozenSet[str]:
        return self.labels.get(state, frozenset())

    def states_with(self, label: str) -> List[str]:
        return [s for s in self.states if label in self.label_set(s)]

    def domain(self, name: str) -> Interval:
        if name in self.constants:
            v = float(self.constants[name])
            return (v, v)
        return self.params[name]

    def symbols(self) -> Tuple[str, ...]:
        return tuple(self.params) + tuple(self.constants)

    def reward_structure(self, name: str) -> RewardStructure:
        from .errors import UnknownRewardStructure

        try:
            return self.rewards[name]
        except KeyError:
            raise UnknownRewardStructure(f"no reward structure named {name!r}") from None

    def constant_point(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.constants.items()}

    def valuation(self, values: Mapping[str, float], timestamp: Optional[int] = None) -> "Valuation":
        """Build a valuation from monitored values, binding the constants."""
        assignments = self.constant_point()
        assignments.update({k: float(v) for k, v in values.items()})
        return Valuation(assignments, timestamp)

    def sample_valuation(self, rng: np.random.Generator) -> "Valuation":
        values = {p: float(rng.uniform(lo, hi)) for p, (lo, hi) in self.params.items()}
        return self.valuation(values)

    def in_domain(self, v: "Valuation", tol: float = 1e-12) -> bool:
        for name, x in v.assignments.items():
            if name in self.params or name in self.constants:
                lo, hi = self.domain(name)
                if not (lo - tol <= x <= hi + tol):
                    return False
        return True

    def instantiate(self, v: "Valuation") -> np.ndarray:
        """Numeric transition matrix at a valuation."""
        idx = self.index
        n = len(self.states)
        mat = np.zeros((n, n))
        point = v.assignments
        for s, row in self.transitions.items():
            for t, f in row.items():
                mat[idx[s], idx[t]] += f.evaluate_float(point)
        return mat

    def instantiate_rewards(self, rwd: RewardStructure, v: "Valuation") -> np.ndarray:
        idx = self.index
        out = np.zeros(len(self.states))
        for s, f in rwd.rewards.items():
            out[idx[s]] = f.evaluate_float(v.assignments)
        return out


@dataclass(frozen=True)
class Valuation:
    assignments: Mapping[str, float]
    timestamp: Optional[int] = None

    def __getitem__(self, name: str) -> float:
        return self.assignments[name]


@dataclass(frozen=True)
class Violation:
    kind: str  # missing-row | row-sum | range | unknown-state | unknown-parameter | reward-range | init
    state: Optional[str]
    message: str

    def __str__(self):
        return f"{self.kind}@{self.state}: {self.message}" if self.state else f"{self.kind}: {self.message}"


def validate(m: Pdtmc, samples: int = 100, seed: int = 0) -> List[Violation]:
    """Return every invariant violation of ``m``; an empty list means valid.

    Row sums are checked symbolically; probability and reward ranges are
    checked at ``samples`` random in-domain valuations.
    """
    out: List[Violation] = []
    states = set(m.states)
    if m.init not in states:
        out.append(Violation("init", m.init, "initial state is not declared"))
    known = set(m.symbols())
    one = RationalFunction.constant(1)

    for s in m.states:
        row = m.row(s)
        if not row:
            out.append(Violation("missing-row", s, "state has no outgoing transitions"))
            continue
        total = RationalFunction.constant(0)
        for t, f in row.items():
            if t not in states:
                out.append(Violation("unknown-state", s, f"transition to undeclared state {t!r}"))
            total = total + f
            for name in f.variables():
                if name not in known:
                    out.append(Violation("unknown-parameter", s, f"{name!r} is not declared"))
        if not total.equals(one):
            out.append(Violation("row-sum", s, f"outgoing probabilities sum to {total}, not 1"))
    for s in m.transitions:
        if s not in states:
            out.append(Violation("unknown-state", s, "transitions from undeclared state"))
    for r in m.rewards.values():
        for s, f in r.rewards.items():
            if s not in states:
                out.append(Violation("unknown-state", s, f"reward {r.name!r} on undeclared state"))
            for name in f.variables():
                if name not in known:
                    out.append(Violation("unknown-parameter", s, f"{name!r} in reward {r.name!r} is not declared"))
    if any(v.kind == "unknown-parameter" for v in out):
        return out

    rng = np.random.default_rng(seed)
    bad_prob: Dict[Tuple[str, str], float] = {}
    bad_rwd: Dict[Tuple[str, str], float] = {}
    for _ in range(samples):
        point = m.sample_valuation(rng).assignments
        for s, row in m.transitions.items():
            for t, f in row.items():
                x = f.evaluate_float(point)
                if not (-ROW_TOL <= x <= 1 + ROW_TOL):
                    bad_prob.setdefault((s, t), x)
        for r in m.rewards.values():
            for s, f in r.rewards.items():
                x = f.evaluate_float(point)
                if x < -REWARD_TOL:
                    bad_rwd.setdefault((r.name, s), x)
    for (s, t), x in bad_prob.items():
        out.append(Violation("range", s, f"P({s},{t}) evaluates to {x:.6g} outside [0, 1]"))
    for (name, s), x in bad_rwd.items():
        out.append(Violation("reward-range", s, f"reward {name!r} evaluates to {x:.6g} < 0"))
    return out


# -- the fruit-picking robot ------------------------------------------------

FRUIT_CONSTANTS = {"p1": Fraction("0.95"), "p2": Fraction("0.2"), "p3": Fraction("0.95")}

FRUIT_DOMAINS: Dict[str, Interval] = {
    "alpha": (0.7, 0.99),
    "beta": (0.01, 0.2),
    "t0": (1.0, 30.0),
    "t1": (1.0, 30.0),
    "t2": (1.0, 30.0),
    "e0": (0.3, 4.5),
    "e1": (0.3, 4.5),
    "e2": (0.3, 4.5),
}

MONITORED = tuple(FRUIT_DOMAINS)

# degradation snapshots: 360 minutes before prediction, at prediction, 240 after
FRUIT_SNAPSHOTS: Dict[str, Dict[str, float]] = {
    "now-360": {"alpha": 0.98, "beta": 0.01, "t0": 1.04, "t1": 10.01, "t2": 8.90,
                "e0": 3.30, "e1": 2.40, "e2": 0.30},
    "now": {"alpha": 0.88, "beta": 0.12, "t0": 11.6, "t1": 14.6, "t2": 11.6,
            "e0": 4.03, "e1": 2.77, "e2": 2.84},
    "now+240": {"alpha": 0.80, "beta": 0.19, "t0": 19.8, "t1": 17.9, "t2": 13.9,
                "e0": 4.49, "e1": 2.99, "e2": 4.49},
}


def fruit_picking_model() -> Tuple[Pdtmc, RewardStructure, RewardStructure]:
    """The six-state fruit-picking robot.

    s0 positions, s1 picks, s2 decides whether to retry, s3 abandons, s4 is
    a successful pick and s5 is the end of the process.  ``beta*p2`` is the
    probability that picking fails.
    """
    v = RationalFunction.var
    one = RationalFunction.constant(1)
    alpha, beta, p1, p2, p3 = v("alpha"), v("beta"), v("p1"), v("p2"), v("p3")
    trans = {
        "s0": {"s1": alpha * p1, "s3": one - alpha * p1},
        "s1": {"s2": beta * p2, "s4": one - beta * p2},
        "s2": {"s0": p3, "s3": one - p3},
        "s3": {"s5": one},
        "s4": {"s5": one},
        "s5": {"s5": one},
    }
    time = RewardStructure("time", {"s0": v("t0"), "s1": v("t1"), "s2": v("t2")})
    energy = RewardStructure("energy", {"s0": v("e0"), "s1": v("e1"), "s2": v("e2")})
    model = Pdtmc(
        states=("s0", "s1", "s2", "s3", "s4", "s5"),
        init="s0",
        transitions=trans,
        labels={"s4": frozenset({"picking success"}), "s5": frozenset({"done"})},
        params=dict(FRUIT_DOMAINS),
        constants=dict(FRUIT_CONSTANTS),
        rewards={"time": time, "energy": energy},
    )
    return model, time, energy

