import csv
import json
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats as sps

from presto.errors import ConfigError
from presto.forecast import ForecasterSpec
from presto.harness import (
    NOISE_UNITS,
    ExperimentConfig,
    NoiseSpec,
    TrendSpec,
    add_noise,
    generate_trend,
    load_config,
    run_batch,
    run_experiment,
    run_rng,
    score_run,
    summarize,
    tau_sweep,
    undesired_fraction,
    write_batch_csv,
    write_stats_json,
    write_tau_csv,
    write_trajectory_csv,
)
from presto.model import FRUIT_SNAPSHOTS, MONITORED


def piecewise(points, lengths):
    """Linear segments through ``points``; segment i has ``lengths[i]`` samples
    after its start point."""
    out = {}
    for k in MONITORED:
        parts = [np.linspace(FRUIT_SNAPSHOTS[a][k], FRUIT_SNAPSHOTS[b][k], n + 1)[1:]
                 for (a, b), n in zip(zip(points, points[1:]), lengths)]
        out[k] = np.concatenate(parts)
    return out


# -- trends and noise --------------------------------------------------------
def test_constant_trend_copies_first_endpoint():
    rng = run_rng(1, 0)
    a = np.random.Generator(np.random.Philox(np.random.SeedSequence([1, 0, 0]))).uniform(0.7, 0.99)
    s = generate_trend(TrendSpec("alpha", (0.7, 0.99), "constant"), rng)
    assert len(s) == 600 and np.all(s == a)


@pytest.mark.parametrize("direction", ["increasing", "decreasing"])
def test_monotone_trend_in_range(direction):
    for run in range(50):
        s = generate_trend(TrendSpec("t0", (1.0, 30.0), direction), run_rng(2, run))
        d = np.diff(s)
        assert np.all(d >= 0) if direction == "increasing" else np.all(d <= 0)
        assert s.min() >= 1.0 and s.max() <= 30.0


def test_trend_values_uniform_between_endpoints():
    pooled = []
    for run in range(1000):
        rng = run_rng(3, run)
        a, b = run_rng(3, run).uniform(0.0, 1.0, size=2)
        s = generate_trend(TrendSpec("beta", (0.0, 1.0), "increasing"), rng)
        lo, hi = min(a, b), max(a, b)
        pooled.append((s - lo) / (hi - lo))
    u = np.concatenate(pooled)
    assert sps.kstest(u, "uniform").statistic < 0.05


def test_bad_trend_and_noise_specs():
    with pytest.raises(ConfigError):
        TrendSpec("alpha", (0.9, 0.9), "increasing")
    with pytest.raises(ConfigError):
        TrendSpec("alpha", (0.1, 0.9), "sideways")
    with pytest.raises(ConfigError):
        NoiseSpec(3)


def test_noise_level_zero_is_identity():
    s = np.linspace(1, 2, 100)
    out = add_noise(s, "t0", NoiseSpec(0), run_rng(0, 0, 1))
    assert np.array_equal(out, s) and out is not s


@pytest.mark.parametrize("param, level", [("alpha", 4), ("t1", 10), ("e2", 2), ("beta", 6)])
def test_noise_sigma(param, level):
    clean = np.full(10_000, 0.5 if param in ("alpha", "beta") else 50.0)
    noisy = add_noise(clean, param, NoiseSpec(level), run_rng(5, level, 1))
    want = level * NOISE_UNITS[param]
    assert abs(np.std(noisy - clean) - want) <= 0.05 * want


def test_alpha_clamped_to_one():
    out = add_noise(np.full(5000, 0.99), "alpha", NoiseSpec(10), run_rng(6, 0, 1))
    assert out.max() <= 1.0
    times = add_noise(np.full(5000, 1.5), "t0", NoiseSpec(10), run_rng(6, 1, 1))
    energy = add_noise(np.full(5000, 0.5), "e0", NoiseSpec(10), run_rng(6, 2, 1))
    assert times.min() >= 1.0 and energy.min() >= 0.3


# -- runs ------------------------------------------------------------------
def test_benign_constants_are_true_negatives(scenario):
    cfg = ExperimentConfig(runs=1)
    clean = {k: np.full(600, FRUIT_SNAPSHOTS["now-360"][k]) for k in MONITORED}
    data = score_run(scenario, cfg, clean, clean)
    assert [r.outcome for r in data.records] == ["true-negative"] * 3


def test_snapshot_trends_are_true_positives(scenario):
    cfg = ExperimentConfig(runs=1)
    clean = piecewise(["now-360", "now", "now+240"], [360, 240])
    data = score_run(scenario, cfg, clean, clean)
    r1, r2, r3 = data.records
    assert r1.outcome == r2.outcome == "true-positive"
    assert abs(r1.error) <= 25 and abs(r2.error) <= 25
    assert r3.outcome == "true-negative"


def test_violation_in_history(scenario):
    # the property is violated from minute 10 of the history onward
    cfg = ExperimentConfig(runs=1)
    early = piecewise(["now-360", "now+240"], [9])
    clean = {k: np.r_[early[k], np.full(591, FRUIT_SNAPSHOTS["now+240"][k])] for k in MONITORED}
    data = score_run(scenario, cfg, clean, clean)
    assert data.records[0].outcome == "violation-before-prediction"


def test_r1_truth_monotone_without_noise(scenario):
    cfg = ExperimentConfig(runs=30)
    for run in range(30):
        data = run_experiment(cfg, run, scenario)
        assert np.all(np.diff(data.truth["R1"]) <= 1e-12)


def test_noise_does_not_change_trends(scenario):
    a = run_experiment(ExperimentConfig(runs=1, noise_level=0), 4, scenario)
    b = run_experiment(ExperimentConfig(runs=1, noise_level=10), 4, scenario)
    for k in MONITORED:
        assert np.array_equal(a.clean[k], b.clean[k])
        assert np.array_equal(a.truth["R2"], b.truth["R2"])


# -- batches -----------------------------------------------------------------
def test_batch_is_reproducible(scenario):
    cfg = ExperimentConfig(seed=7, runs=40)
    a, b = run_batch(cfg, scenario), run_batch(cfg, scenario)
    assert a.records == b.records
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    c = run_batch(replace(cfg, seed=8), scenario)
    assert a.records != c.records


def test_parallel_batch_matches_serial(scenario):
    cfg = ExperimentConfig(seed=3, runs=24, noise_level=4)
    serial = run_batch(cfg, scenario)
    parallel = run_batch(replace(cfg, jobs=3), scenario)
    assert serial.records == parallel.records


def test_outcomes_partition_batch(scenario):
    stats = run_batch(ExperimentConfig(seed=1, runs=50, noise_level=2), scenario)
    for rid, rs in stats.requirements.items():
        assert sum(rs.counts.values()) == 50
        assert rs.counts["true-positive"] == rs.n_errors
        hist = rs.histogram()
        assert sum(hist["counts"]) == rs.n_errors


def pooled_errors(stats):
    return [e for rs in stats.requirements.values() for e in rs.errors]


def test_error_mean_shifts_right_with_noise(scenario):
    # paired seeds: both batches share their trends and differ only in noise
    quiet = pooled_errors(run_batch(ExperimentConfig(seed=0, runs=100, noise_level=0), scenario))
    loud = pooled_errors(run_batch(ExperimentConfig(seed=0, runs=100, noise_level=10), scenario))
    assert quiet and loud
    assert np.mean(loud) > np.mean(quiet)


def test_undesired_fraction():
    pairs = [(100, 90), (200, 180), (70, 75)]
    assert undesired_fraction(pairs, 0) == 1.0
    assert undesired_fraction(pairs, 240) == 1.0
    # tau 20: (100 -> ok), (200 -> ok), (70 -> 50 <= 60)
    assert undesired_fraction(pairs, 20) == pytest.approx(1 / 3)
    assert undesired_fraction([], 10) is None


def test_tau_sweep_without_true_positives(scenario):
    cfg = ExperimentConfig(runs=2, taus=(0, 30))
    rec = summarize(cfg, [], [r.id for r in scenario.requirements])
    assert tau_sweep(rec) == {"R1": {0: None, 30: None}, "R2": {0: None, 30: None}, "R3": {0: None, 30: None}}


# -- configuration and files --------------------------------------------------
@pytest.mark.parametrize("data", [
    {"runs": 0},
    {"noise_level": 5},
    {"horizon": 0},
    {"method": "holt"},
    {"tau": [-1]},
    {"constant_prob": 1.5},
    {"seeds": 3},
    {"runs": "many"},
])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(seed=4, runs=10, forecaster=ForecasterSpec("drift"), noise_level=6, taus=(0, 5))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"runs": 3, "props": "reqs.pctl"}))
    loaded = load_config(path)
    assert loaded.props_path == str(tmp_path / "reqs.pctl")
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_writers(tmp_path, scenario):
    cfg = ExperimentConfig(seed=2, runs=5, taus=(0, 30, 240))
    stats = run_batch(cfg, scenario)
    write_batch_csv(stats, tmp_path / "batch.csv")
    write_stats_json(stats, tmp_path / "stats.json")
    write_tau_csv(tau_sweep(stats), tmp_path / "tau.csv")
    data = run_experiment(cfg, 0, scenario)
    write_trajectory_csv(data, cfg, tmp_path / "traj.csv")

    rows = list(csv.DictReader(open(tmp_path / "batch.csv")))
    assert len(rows) == 15 and set(rows[0]) == {"run", "requirement", "outcome", "t_p", "t_ref", "error"}
    js = json.loads((tmp_path / "stats.json").read_text())
    assert js["runs"] == 5 and set(js["requirements"]) == {"R1", "R2", "R3"}
    tau_rows = list(csv.reader(open(tmp_path / "tau.csv")))
    assert tau_rows[0] == ["tau", "R1", "R2", "R3"] and len(tau_rows) == 4
    traj = list(csv.DictReader(open(tmp_path / "traj.csv")))
    assert len(traj) == 600
    assert traj[0]["minute"] == "-359" and traj[359]["R1_predicted"] == ""
    assert float(traj[360]["R1_predicted"]) == pytest.approx(data.predicted["R1"][0])
