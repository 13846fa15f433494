"""Numeric ground truth for instantiated chains.

Everything here works on plain float matrices: the parametric model is
evaluated at one valuation first, then reachability and reward queries are
solved with a direct linear solve (LU, i.e. Gaussian elimination) or with
value iteration.  None of it shares code with the symbolic engine, so the two
can check each other.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import NonConvergence, RewardDivergence, SingularSystem, UnsupportedProperty
from .model import Pdtmc, Valuation
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
    SteadyState,
    TrueF,
    Until,
)

VI_TOL = 1e-12
VI_MAX_ITER = 1_000_000
POS = 0.0  # an edge exists when its probability is strictly above this


def _sat(m: Pdtmc, f) -> np.ndarray:
    n = len(m.states)
    if isinstance(f, TrueF):
        return np.ones(n, dtype=bool)
    if isinstance(f, Atom):
        return np.array([f.label in m.label_set(s) for s in m.states])
    if isinstance(f, Not):
        return ~_sat(m, f.arg)
    if isinstance(f, And):
        return _sat(m, f.left) & _sat(m, f.right)
    raise UnsupportedProperty(f"unsupported state formula {f!r}")


def _backward(P: np.ndarray, target: np.ndarray, through: np.ndarray) -> np.ndarray:
    reach = target.copy()
    changed = True
    while changed:
        nxt = reach | (through & ((P > POS) @ reach.astype(float) > 0))
        changed = bool((nxt != reach).any())
        reach = nxt
    return reach


def _mask(n: int, idx: Iterable[int]) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    out[list(idx)] = True
    return out


def until_probabilities(
    P: np.ndarray, allowed: np.ndarray, target: np.ndarray, method: str = "auto"
) -> np.ndarray:
    """Probability of ``allowed U target`` from every state."""
    n = len(P)
    inner = allowed & ~target
    good = _backward(P, target, inner)
    x = np.zeros(n)
    x[target] = 1.0
    q = good & ~target
    if not q.any():
        return x
    A = P[np.ix_(q, q)]
    b = P[np.ix_(q, target)].sum(axis=1)
    x[q] = _solve(A, b, method)
    return x


def reach_probabilities(P: np.ndarray, target: Sequence[int], method: str = "auto") -> np.ndarray:
    n = len(P)
    return until_probabilities(P, np.ones(n, dtype=bool), _mask(n, target), method)


def reach_rewards(
    P: np.ndarray, rewards: np.ndarray, target: np.ndarray, start: int, method: str = "auto"
) -> float:
    """Expected reward collected before the first visit to ``target``."""
    n = len(P)
    if target[start]:
        return 0.0
    prob = until_probabilities(P, np.ones(n, dtype=bool), target, method)
    # states reachable from start before hitting the target
    seen = _mask(n, [start])
    frontier = seen.copy()
    while frontier.any():
        nxt = ((P[frontier & ~target] > POS).any(axis=0)) & ~seen
        seen |= nxt
        frontier = nxt
    live = seen & ~target
    if (prob[live] < 1 - 1e-9).any():
        raise RewardDivergence("target is not reached almost surely; expected reward is infinite")
    A = P[np.ix_(live, live)]
    b = rewards[live]
    x = np.zeros(n)
    x[live] = _solve(A, b, method)
    return float(x[start])


def _solve(A: np.ndarray, b: np.ndarray, method: str) -> np.ndarray:
    """Solve ``x = A x + b``."""
    if method in ("auto", "gauss"):
        try:
            M = np.eye(len(A)) - A
            if np.linalg.cond(M) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            x = np.linalg.solve(M, b)
            # one refinement step with the residual in extended precision
            r = b.astype(np.longdouble) - M.astype(np.longdouble) @ x.astype(np.longdouble)
            return x + np.linalg.solve(M, r.astype(float))
        except np.linalg.LinAlgError as exc:
            if method == "gauss":
                raise SingularSystem(str(exc)) from None
    if method not in ("auto", "vi", "gauss"):
        raise ValueError(f"unknown method {method!r}")
    return value_iteration(A, b)


def value_iteration(A: np.ndarray, b: np.ndarray, tol: float = VI_TOL, max_iter: int = VI_MAX_ITER) -> np.ndarray:
    x = np.zeros(len(b))
    for _ in range(max_iter):
        nxt = A @ x + b
        if np.max(np.abs(nxt - x), initial=0.0) <= tol:
            return nxt
        x = nxt
    raise NonConvergence(f"value iteration did not converge in {max_iter} iterations")


def oracle_solve(
    m: Pdtmc,
    v: Union[Valuation, Mapping[str, float]],
    query: Union[Query, Requirement],
    method: str = "auto",
    initial: str | None = None,
) -> float:
    """Numeric answer to ``query`` on ``m`` instantiated at ``v``.

    ``method`` is ``"gauss"`` (direct solve), ``"vi"`` (value iteration) or
    ``"auto"`` (direct solve, falling back to value iteration).
    """
    if not isinstance(v, Valuation):
        v = m.valuation(v)
    if isinstance(query, Requirement):
        query = query.query
    P = m.instantiate(v)
    n = len(P)
    s0 = m.index[initial or m.init]

    if isinstance(query, ProbQuery):
        p = query.path
        if isinstance(p, Next):
            return float(P[s0, _sat(m, p.arg)].sum())
        if isinstance(p, Eventually):
            p = p.as_until()
        if isinstance(p, Until):
            allowed, target = _sat(m, p.left), _sat(m, p.right)
            if p.bound is None:
                return float(until_probabilities(P, allowed, target, method)[s0])
            x = target.astype(float)
            for _ in range(p.bound):
                x = np.where(target, 1.0, np.where(allowed, P @ x, 0.0))
            return float(x[s0])
        raise UnsupportedProperty(f"unsupported path formula {p!r}")

    if isinstance(query, RewardQuery):
        r = m.instantiate_rewards(m.reward_structure(query.reward), v)
        kind = query.kind
        if isinstance(kind, Reach):
            return reach_rewards(P, r, _sat(m, kind.target), s0, method)
        if isinstance(kind, Cumulative):
            # distribution-forward simulation of the k-step expectation
            dist = np.zeros(n)
            dist[s0] = 1.0
            total = 0.0
            for _ in range(kind.k):
                total += float(dist @ r)
                dist = dist @ P
            return total
        if isinstance(kind, Instantaneous):
            dist = np.zeros(n)
            dist[s0] = 1.0
            for _ in range(kind.k):
                dist = dist @ P
            return float(dist @ r)
        if isinstance(kind, SteadyState):
            raise UnsupportedProperty("steady-state reward queries are not supported")
    raise UnsupportedProperty(f"unsupported query {query!r}")
