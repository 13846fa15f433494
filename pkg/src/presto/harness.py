"""Synthetic experiments on the fruit-picking robot.

Each run draws one monotone trend per monitored parameter (600 minutes),
optionally adds measurement noise, feeds the first 360 minutes to the
predictor and scores the prediction against the remaining 240.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .engine import PmcExpression, check
from .errors import ConfigError
from .forecast import ForecasterSpec
from .model import Pdtmc, fruit_picking_model
from .predictor import OUTCOMES, ObservationSeries, Outcome, classify, evaluate_trajectory, first_violation, predict
from .properties import Requirement, parse_properties

TOTAL_LEN = 600
SPLIT_AT = 360
HORIZON = 240
NOISE_LEVELS = (0, 2, 4, 6, 8, 10)
TOO_EARLY = 60  # t_p - tau at or below this is a trigger that comes too early
DEFAULT_TAUS = tuple(range(0, 241, 10))

FRUIT_REQUIREMENTS = """\
R1: P=? [ F "picking success" ] >= 0.8
R2: R{"time"}=? [ F "done" ] <= 30
R3: R{"energy"}=? [ F "done" ] <= 10
"""

# trend direction when a parameter is not constant
TREND_DIRECTIONS = {
    "alpha": "decreasing",
    "beta": "increasing",
    "t0": "increasing", "t1": "increasing", "t2": "increasing",
    "e0": "increasing", "e1": "increasing", "e2": "increasing",
}

# noise standard deviation per noise level, and the post-noise clamps
NOISE_UNITS = {
    "alpha": 0.01, "beta": 0.01,
    "t0": 1.0, "t1": 1.0, "t2": 1.0,
    "e0": 0.3, "e1": 0.3, "e2": 0.3,
}
NOISE_CLAMPS = {
    "alpha": (None, 1.0), "beta": (None, 1.0),
    "t0": (1.0, None), "t1": (1.0, None), "t2": (1.0, None),
    "e0": (0.3, None), "e1": (0.3, None), "e2": (0.3, None),
}


@dataclass(frozen=True)
class TrendSpec:
    param: str
    range: Tuple[float, float]
    direction: str  # increasing | decreasing | constant
    total_len: int = TOTAL_LEN

    def __post_init__(self):
        lo, hi = self.range
        if not lo < hi:
            raise ConfigError(f"empty range for {self.param}: {self.range}")
        if self.direction not in ("increasing", "decreasing", "constant"):
            raise ConfigError(f"unknown trend direction {self.direction!r}")


@dataclass(frozen=True)
class NoiseSpec:
    level: int = 0

    def __post_init__(self):
        if self.level not in NOISE_LEVELS:
            raise ConfigError(f"noise level must be one of {NOISE_LEVELS}")

    def sigma(self, param: str) -> float:
        return self.level * NOISE_UNITS.get(param, 0.0)


@dataclass
class ExperimentConfig:
    seed: int = 0
    runs: int = 200
    forecaster: ForecasterSpec = field(default_factory=ForecasterSpec)
    horizon: int = HORIZON
    history: int = SPLIT_AT
    noise_level: int = 0
    taus: Tuple[int, ...] = DEFAULT_TAUS
    constant_prob: float = 0.2
    jobs: int = 1
    model_path: Optional[str] = None
    props_path: Optional[str] = None
    trajectories: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.horizon < 1 or self.history < self.forecaster.min_length():
            raise ConfigError("horizon must be >= 1 and history long enough to fit")
        if not 0 <= self.constant_prob <= 1:
            raise ConfigError("constant_prob must lie in [0, 1]")
        NoiseSpec(self.noise_level)
        if any(t < 0 for t in self.taus):
            raise ConfigError("tau values must be non-negative")

    @property
    def total_len(self) -> int:
        return self.history + self.horizon

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        data = dict(data)
        known = {"seed", "runs", "method", "order", "horizon", "history", "noise_level", "tau",
                 "constant_prob", "jobs", "model", "props", "trajectories"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            spec = ForecasterSpec(data.get("method", "arima"), tuple(data.get("order", (1, 1, 0))))
            return cls(
                seed=int(data.get("seed", 0)),
                runs=int(data.get("runs", 200)),
                forecaster=spec,
                horizon=int(data.get("horizon", HORIZON)),
                history=int(data.get("history", SPLIT_AT)),
                noise_level=int(data.get("noise_level", 0)),
                taus=tuple(int(t) for t in data.get("tau", DEFAULT_TAUS)),
                constant_prob=float(data.get("constant_prob", 0.2)),
                jobs=int(data.get("jobs", 1)),
                model_path=data.get("model"),
                props_path=data.get("props"),
                trajectories=int(data.get("trajectories", 1)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "runs": self.runs,
            "method": self.forecaster.method,
            "order": list(self.forecaster.order),
            "horizon": self.horizon,
            "history": self.history,
            "noise_level": self.noise_level,
            "tau": list(self.taus),
            "constant_prob": self.constant_prob,
            "jobs": self.jobs,
            "model": self.model_path,
            "props": self.props_path,
            "trajectories": self.trajectories,
        }


def run_rng(seed: int, run: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, run, stream) triple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run, stream])))


def generate_trend(spec: TrendSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.range
    a, b = rng.uniform(lo, hi, size=2)
    if spec.direction == "constant":
        return np.full(spec.total_len, a)
    values = rng.uniform(min(a, b), max(a, b), size=spec.total_len)
    values.sort()
    return values[::-1].copy() if spec.direction == "decreasing" else values


def add_noise(series: np.ndarray, param: str, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add zero-mean Gaussian noise for ``param`` at ``noise.level`` and clamp."""
    z = rng.standard_normal(len(series))
    if noise.level == 0:
        return np.asarray(series, dtype=float).copy()
    out = series + noise.sigma(param) * z
    lo, hi = NOISE_CLAMPS.get(param, (None, None))
    if lo is not None or hi is not None:
        out = np.clip(out, lo, hi)
    return out


@dataclass
class Scenario:
    model: Pdtmc
    requirements: List[Requirement]
    expressions: List[PmcExpression]


def load_scenario(cfg: ExperimentConfig) -> Scenario:
    if cfg.model_path:
        from .modelformat import load_model

        model = load_model(cfg.model_path)
    else:
        model = fruit_picking_model()[0]
    if cfg.props_path:
        with open(cfg.props_path, encoding="utf-8") as fh:
            reqs = parse_properties(fh.read())
    else:
        reqs = parse_properties(FRUIT_REQUIREMENTS)
    return Scenario(model, reqs, [check(model, r) for r in reqs])


@dataclass
class RunRecord:
    run: int
    requirement: str
    outcome: str
    t_p: Optional[int]
    t_ref: Optional[int]
    error: Optional[int]


@dataclass
class RunData:
    """Everything one run produced, for plotting and CSV export."""

    clean: Dict[str, np.ndarray]
    observed: Dict[str, np.ndarray]
    truth: Dict[str, np.ndarray]
    predicted: Dict[str, np.ndarray]
    records: List[RunRecord]


def simulate_parameters(model: Pdtmc, cfg: ExperimentConfig, run: int):
    """Clean trends and noisy observations for every monitored parameter.

    Trends come from stream 0 and noise from stream 1, so runs with the
    same seed share their trends across noise levels.
    """
    trend_rng = run_rng(cfg.seed, run, 0)
    noise_rng = run_rng(cfg.seed, run, 1)
    noise = NoiseSpec(cfg.noise_level)
    clean, observed = {}, {}
    for name in model.params:
        direction = TREND_DIRECTIONS.get(name, "increasing")
        if trend_rng.random() < cfg.constant_prob:
            direction = "constant"
        spec = TrendSpec(name, tuple(model.params[name]), direction, cfg.total_len)
        clean[name] = generate_trend(spec, trend_rng)
        observed[name] = add_noise(clean[name], name, noise, noise_rng)
    return clean, observed


def run_experiment(cfg: ExperimentConfig, run: int, scenario: Optional[Scenario] = None) -> RunData:
    """One seeded run.  Ground truth is always the clean trend: noise is a
    property of the measurements, not of the system."""
    sc = scenario or load_scenario(cfg)
    clean, observed = simulate_parameters(sc.model, cfg, run)
    return score_run(sc, cfg, clean, observed, run)


def score_run(sc: Scenario, cfg: ExperimentConfig, clean: Mapping[str, np.ndarray],
              observed: Mapping[str, np.ndarray], run: int = 0) -> RunData:
    """Predict from the observed history and classify against the clean trends."""
    n_hist = cfg.history
    history = ObservationSeries({k: v[:n_hist] for k, v in observed.items()}, now=n_hist)
    results = predict(sc.model, sc.requirements, sc.expressions, history, cfg.horizon, cfg.forecaster)
    truth, predicted, records = {}, {}, []
    for req, expr, res in zip(sc.requirements, sc.expressions, results):
        traj = np.broadcast_to(evaluate_trajectory(sc.model, expr, clean), (cfg.total_len,))
        truth[req.id] = traj
        predicted[req.id] = res.trajectory
        before = first_violation(req, traj[:n_hist]) is not None
        t_ref = first_violation(req, traj[n_hist:])
        out: Outcome = classify(res, t_ref, cfg.horizon, violated_before=before)
        records.append(RunRecord(run, req.id, out.kind, res.t_p, t_ref, out.error))
    return RunData(dict(clean), dict(observed), truth, predicted, records)


def _run_records(args) -> List[RunRecord]:
    cfg, run = args
    return run_experiment(cfg, run, _worker_scenario(cfg)).records


_SCENARIO_CACHE: Dict[tuple, Scenario] = {}


def _worker_scenario(cfg: ExperimentConfig) -> Scenario:
    key = (cfg.model_path, cfg.props_path)
    if key not in _SCENARIO_CACHE:
        _SCENARIO_CACHE[key] = load_scenario(cfg)
    return _SCENARIO_CACHE[key]


@dataclass
class RequirementStats:
    counts: Dict[str, int]
    errors: List[int]

    @property
    def n_errors(self) -> int:
        return len(self.errors)

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.errors)) if self.errors else None

    @property
    def std(self) -> Optional[float]:
        return float(np.std(self.errors, ddof=1)) if len(self.errors) > 1 else None

    def histogram(self, width: int = 5) -> Dict[str, list]:
        if not self.errors:
            return {"edges": [], "counts": []}
        lo = int(np.floor(min(self.errors) / width)) * width
        hi = int(np.floor(max(self.errors) / width)) * width + width
        edges = np.arange(lo, hi + width, width)
        counts, _ = np.histogram(self.errors, bins=edges)
        return {"edges": edges.tolist(), "counts": counts.tolist()}

    def to_json(self) -> dict:
        return {
            "counts": dict(self.counts),
            "error": {
                "n": self.n_errors,
                "mean": self.mean,
                "std": self.std,
                "histogram": self.histogram(),
            },
        }


@dataclass
class BatchStats:
    config: ExperimentConfig
    records: List[RunRecord]
    requirements: Dict[str, RequirementStats]

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "runs": self.config.runs,
            "requirements": {k: v.to_json() for k, v in self.requirements.items()},
        }


def summarize(cfg: ExperimentConfig, records: Sequence[RunRecord], req_ids: Sequence[str]) -> BatchStats:
    per = {}
    for rid in req_ids:
        rows = [r for r in records if r.requirement == rid]
        counts = {k: 0 for k in OUTCOMES}
        for r in rows:
            counts[r.outcome] += 1
        errors = [r.error for r in rows if r.outcome == "true-positive"]
        per[rid] = RequirementStats(counts, errors)
    return BatchStats(cfg, list(records), per)


def run_batch(cfg: ExperimentConfig, scenario: Optional[Scenario] = None) -> BatchStats:
    """Run ``cfg.runs`` seeded experiments; the result depends only on ``cfg``."""
    sc = scenario or load_scenario(cfg)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            chunks = list(pool.map(_run_records, [(cfg, i) for i in range(cfg.runs)], chunksize=8))
    else:
        chunks = [run_experiment(cfg, i, sc).records for i in range(cfg.runs)]
    records = [r for chunk in chunks for r in chunk]
    return summarize(cfg, records, [r.id for r in sc.requirements])


def undesired_fraction(pairs: Sequence[Tuple[int, int]], tau: float, too_early: int = TOO_EARLY) -> Optional[float]:
    """Share of ``(t_p, t_ref)`` pairs for which ``tau`` is a bad choice:
    the trigger lands at or before ``too_early`` minutes, or ``tau`` is
    smaller than the prediction error."""
    if not pairs:
        return None
    bad = sum(1 for t_p, t_ref in pairs if (t_p - tau) <= too_early or tau < abs(t_p - t_ref))
    return bad / len(pairs)


def tau_sweep(stats: BatchStats, taus: Optional[Sequence[int]] = None) -> Dict[str, Dict[int, Optional[float]]]:
    """Percentage of undesired cases per tau, over the runs that violate
    within the horizon and were predicted (true positives)."""
    taus = stats.config.taus if taus is None else taus
    out = {}
    for rid in stats.requirements:
        pairs = [(r.t_p, r.t_ref) for r in stats.records
                 if r.requirement == rid and r.outcome == "true-positive"]
        out[rid] = {}
        for tau in taus:
            frac = undesired_fraction(pairs, tau)
            out[rid][tau] = None if frac is None else 100.0 * frac
    return out


# -- file output ------------------------------------------------------------
def _cell(x):
    return "" if x is None else x


def write_batch_csv(stats: BatchStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "requirement", "outcome", "t_p", "t_ref", "error"])
        for r in stats.records:
            w.writerow([r.run, r.requirement, r.outcome, _cell(r.t_p), _cell(r.t_ref), _cell(r.error)])


def write_stats_json(stats: BatchStats, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_json(), fh, indent=2)
        fh.write("\n")


def write_tau_csv(sweep: Mapping[str, Mapping[int, Optional[float]]], path) -> None:
    rids = list(sweep)
    taus = sorted({t for v in sweep.values() for t in v})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tau"] + rids)
        for t in taus:
            w.writerow([t] + [_cell(None if sweep[r][t] is None else round(sweep[r][t], 6)) for r in rids])


def write_trajectory_csv(data: RunData, cfg: ExperimentConfig, path) -> None:
    """Per-minute plot data for one run; minute 0 is the prediction time."""
    params = list(data.clean)
    rids = list(data.truth)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["minute"] + [f"{p}_clean" for p in params] + [f"{p}_observed" for p in params]
                   + [f"{r}_truth" for r in rids] + [f"{r}_predicted" for r in rids])
        for i in range(cfg.total_len):
            minute = i + 1 - cfg.history
            row = [minute]
            row += [f"{data.clean[p][i]:.10g}" for p in params]
            row += [f"{data.observed[p][i]:.10g}" for p in params]
            row += [f"{data.truth[r][i]:.10g}" for r in rids]
            row += [f"{data.predicted[r][minute - 1]:.10g}" if minute >= 1 else "" for r in rids]
            w.writerow(row)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    base = os.path.dirname(os.path.abspath(path))
    for key in ("model", "props"):
        if data.get(key) and not os.path.isabs(data[key]):
            data[key] = os.path.join(base, data[key])
    return ExperimentConfig.from_dict(data)
