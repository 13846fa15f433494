"""Seeded random pDTMCs for oracle-equivalence and order-independence tests."""
from fractions import Fraction

import numpy as np

from presto.model import Pdtmc, RewardStructure
from presto.ratfunc import RationalFunction

PARAM_NAMES = ("x", "y", "z")
PARAM_DOMAIN = (0.1, 0.9)


def _split(rng, params, k):
    """k symbolic probabilities summing exactly to 1, each in (0, 1) on the domain."""
    one = RationalFunction.constant(1)
    if k == 1:
        return [one]
    p = RationalFunction.var(str(rng.choice(params))) if params else RationalFunction.constant(Fraction(1, 2))
    if rng.random() < 0.3:
        # scale by a literal weight so not every split is p / 1-p
        w = Fraction(int(rng.integers(1, 5)), 5)
        p = p * w
    first = p
    rest = _split(rng, params, k - 1)
    return [first] + [(one - p) * r for r in rest]


def random_pdtmc(rng: np.random.Generator, n_states=None, n_params=None, fail_state=True) -> Pdtmc:
    """Random chain whose last state is labelled "goal" (absorbing).

    With ``fail_state`` an extra absorbing "fail" state exists, so
    reachability is genuinely parametric; without it every state reaches the
    goal almost surely (reward queries stay finite).
    """
    n = int(n_states or rng.integers(3, 11))
    k = int(n_params or rng.integers(1, 4))
    params = list(PARAM_NAMES[:k])
    states = [f"s{i}" for i in range(n)]
    goal = states[-1]
    fail = states[-2] if fail_state and n >= 3 else None
    transient = [s for s in states if s not in (goal, fail)]
    trans = {}
    for i, s in enumerate(transient):
        # one edge forward guarantees the goal stays reachable
        forward = transient[i + 1] if i + 1 < len(transient) else goal
        pool = [t for t in states if t != forward]
        extra = int(rng.integers(0, min(3, len(pool)) + 1))
        succ = [forward] + list(rng.choice(pool, size=extra, replace=False))
        probs = _split(rng, params, len(succ))
        row = {}
        for t, f in zip(succ, probs):
            row[str(t)] = row[str(t)] + f if str(t) in row else f
        trans[s] = row
    trans[goal] = {goal: RationalFunction.constant(1)}
    if fail:
        trans[fail] = {fail: RationalFunction.constant(1)}
    rewards = {}
    for s in transient:
        if rng.random() < 0.8:
            c = Fraction(int(rng.integers(1, 10)))
            if rng.random() < 0.5:
                rewards[s] = RationalFunction.constant(c) * RationalFunction.var(str(rng.choice(params)))
            else:
                rewards[s] = RationalFunction.constant(c)
    labels = {goal: frozenset({"goal"})}
    if fail:
        labels[fail] = frozenset({"fail"})
    return Pdtmc(
        states=tuple(states),
        init=states[0],
        transitions=trans,
        labels=labels,
        params={p: PARAM_DOMAIN for p in params},
        constants={},
        rewards={"cost": RewardStructure("cost", rewards)},
    )
