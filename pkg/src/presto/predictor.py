"""Runtime prediction: forecast parameters, propagate them through PMC
expressions and locate the first predicted requirement violation."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .engine import PmcExpression
from .errors import ConfigError, MissingParameterSeries
from .forecast import ForecasterSpec, fit, forecast
from .model import Pdtmc
from .properties import Requirement

OUTCOMES = (
    "violation-before-prediction",
    "true-positive",
    "false-positive",
    "false-negative",
    "true-negative",
)


@dataclass
class ObservationSeries:
    """Per-parameter observations on a shared one-minute clock."""

    params: Dict[str, np.ndarray]
    now: int = 0

    def __post_init__(self):
        self.params = {k: np.asarray(v, dtype=float) for k, v in self.params.items()}
        lengths = {len(v) for v in self.params.values()}
        if len(lengths) > 1:
            raise ValueError(f"observation series differ in length: {sorted(lengths)}")

    def __len__(self):
        return len(next(iter(self.params.values()))) if self.params else 0

    def last(self) -> Dict[str, float]:
        return {k: float(v[-1]) for k, v in self.params.items()}

    @classmethod
    def from_csv(cls, path) -> "ObservationSeries":
        """Read ``t,<param>,...`` rows; ``t`` is integer minutes, strictly increasing."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if not reader.fieldnames or reader.fieldnames[0].strip() != "t":
                raise ConfigError("observation CSV must start with a 't' column")
            names = [n.strip() for n in reader.fieldnames[1:]]
            ts: List[int] = []
            cols: Dict[str, List[float]] = {n: [] for n in names}
            for row in reader:
                row = {k.strip(): v for k, v in row.items()}
                t = int(row["t"])
                if ts and t <= ts[-1]:
                    raise ConfigError(f"time column must be strictly increasing (t={t} after {ts[-1]})")
                if ts and t != ts[-1] + 1:
                    raise ConfigError(f"observations must be one minute apart (gap after t={ts[-1]})")
                ts.append(t)
                for n in names:
                    cols[n].append(float(row[n]))
        if not ts:
            raise ConfigError("observation CSV has no rows")
        return cls(cols, now=ts[-1])


@dataclass
class PredictionResult:
    requirement_id: str
    horizon: int
    trajectory: np.ndarray
    value_now: float
    violation_at_now: bool
    t_p: Optional[int]
    trigger_time: Optional[int]
    comparator: str = ">="
    threshold: float = 0.0
    forecasts: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "requirement": self.requirement_id,
            "comparator": self.comparator,
            "threshold": self.threshold,
            "horizon": self.horizon,
            "value_now": self.value_now,
            "violation_at_now": self.violation_at_now,
            "t_p": self.t_p,
            "trigger_time": self.trigger_time,
            "trajectory": [float(x) for x in self.trajectory],
        }


@dataclass(frozen=True)
class Outcome:
    kind: str
    error: Optional[int] = None  # t_p - t_ref, true positives only


def trigger_time(t_p: Optional[int], tau: float) -> Optional[int]:
    """Minutes from now at which to trigger adaptation: ``max(now, t_p - tau)``."""
    if t_p is None:
        return None
    return int(max(0, t_p - tau))


def first_violation(req: Requirement, values: np.ndarray) -> Optional[int]:
    """1-based index of the first value violating ``req``, or None."""
    bad = np.nonzero(req.violated(np.asarray(values)))[0]
    return int(bad[0]) + 1 if len(bad) else None


def clamp_to_domain(model: Pdtmc, name: str, values: np.ndarray) -> np.ndarray:
    lo, hi = model.domain(name)
    return np.clip(values, lo, hi)


def needed_parameters(model: Pdtmc, expressions: Sequence[PmcExpression]) -> List[str]:
    names = set()
    for e in expressions:
        names.update(e.function.variables())
    return [n for n in model.params if n in names] + sorted(n for n in names if n not in model.params and n not in model.constants)


def forecast_parameters(
    model: Pdtmc,
    obs: ObservationSeries,
    names: Sequence[str],
    horizon: int,
    spec: ForecasterSpec,
    jobs: int = 1,
) -> Dict[str, np.ndarray]:
    """Fit and forecast each named parameter, clamped into its domain."""
    missing = [n for n in names if n not in obs.params]
    if missing:
        raise MissingParameterSeries(f"no observations for parameter(s): {', '.join(missing)}")

    def one(name):
        fitted = fit(spec, obs.params[name])
        return name, clamp_to_domain(model, name, forecast(fitted, horizon))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return dict(pool.map(one, names))
    return dict(one(n) for n in names)


def evaluate_trajectory(model: Pdtmc, expr: PmcExpression, values: Mapping[str, np.ndarray]) -> np.ndarray:
    point = dict(model.constant_point())
    point.update(values)
    return np.asarray(expr.compiled()(point), dtype=float)


def predict(
    model: Pdtmc,
    requirements: Sequence[Requirement],
    expressions: Sequence[PmcExpression],
    obs: ObservationSeries,
    horizon: int = 240,
    spec: ForecasterSpec = ForecasterSpec(),
    tau: float = 0,
    forecast_all: bool = False,
) -> List[PredictionResult]:
    """Predict, for each requirement, its property trajectory over ``horizon``
    minutes and the first minute at which it is violated.

    With ``forecast_all`` every monitored model parameter is forecast, not
    only those the expressions mention.
    """
    if horizon < 1:
        raise ConfigError("horizon must be at least 1 minute")
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    by_id = {e.requirement_id: e for e in expressions}
    missing = [r.id for r in requirements if r.id not in by_id]
    if missing:
        raise ConfigError(f"no PMC expression for requirement(s): {', '.join(missing)}")

    names = needed_parameters(model, [by_id[r.id] for r in requirements])
    if forecast_all:
        names = list(dict.fromkeys(list(model.params) + names))
    unknown = [n for n in names if n not in model.params]
    if unknown:
        raise MissingParameterSeries(f"parameter(s) neither monitored nor constant: {', '.join(unknown)}")
    future = forecast_parameters(model, obs, names, horizon, spec)
    now_point = {n: clamp_to_domain(model, n, np.array([obs.params[n][-1]])) for n in names}

    results = []
    for req in requirements:
        expr = by_id[req.id]
        value_now = float(evaluate_trajectory(model, expr, now_point)[0])
        traj = evaluate_trajectory(model, expr, future)
        traj = np.broadcast_to(traj, (horizon,)).copy()
        at_now = bool(req.violated(value_now))
        t_p = None if at_now else first_violation(req, traj)
        results.append(PredictionResult(
            requirement_id=req.id,
            horizon=horizon,
            trajectory=traj,
            value_now=value_now,
            violation_at_now=at_now,
            t_p=t_p,
            trigger_time=trigger_time(t_p, tau),
            comparator=req.comparator,
            threshold=req.threshold,
            forecasts=future,
        ))
    return results


def classify(
    result: PredictionResult,
    t_ref: Optional[int],
    horizon: Optional[int] = None,
    violated_before: bool = False,
) -> Outcome:
    """Compare a prediction with the actual first violation minute ``t_ref``.

    A positive error means the violation was predicted later than it happened.
    """
    h = result.horizon if horizon is None else horizon
    if violated_before or result.violation_at_now:
        return Outcome("violation-before-prediction")
    t_p = result.t_p if result.t_p is not None and result.t_p <= h else None
    t_ref = t_ref if t_ref is not None and 1 <= t_ref <= h else None
    if t_p is not None and t_ref is not None:
        return Outcome("true-positive", t_p - t_ref)
    if t_p is not None:
        return Outcome("false-positive")
    if t_ref is not None:
        return Outcome("false-negative")
    return Outcome("true-negative")
