"""``presto`` command line.

Exit codes: 0 ok, 1 unexpected failure, 2 input does not parse, 3 model
checking failed, 4 observations miss a parameter column, 5 invalid
experiment config.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from typing import List, Optional

from . import __version__
from .engine import PmcExpression, check_all
from .errors import ConfigError, EngineError, MissingParameterSeries, ParseError
from .forecast import ForecasterSpec
from .modelformat import load_model
from .predictor import ObservationSeries, predict
from .properties import parse_properties

log = logging.getLogger("presto")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_ENGINE, EXIT_MISSING, EXIT_CONFIG = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None


def _load_inputs(model_path: str, props_path: str):
    try:
        model = load_model(model_path)
    except OSError as exc:
        raise CliError(f"cannot read {model_path}: {exc.strerror}", EXIT_PARSE) from None
    except ParseError as exc:
        raise CliError(f"{model_path}: {exc}", EXIT_PARSE) from None
    try:
        reqs = parse_properties(_read(props_path))
    except ParseError as exc:
        raise CliError(f"{props_path}: {exc}", EXIT_PARSE) from None
    return model, reqs


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


# -- check ------------------------------------------------------------------
def cmd_check(args) -> int:
    model, reqs = _load_inputs(args.model, args.props)
    t0 = time.perf_counter()
    try:
        exprs = check_all(model, reqs)
    except EngineError as exc:
        raise CliError(f"model checking failed: {exc}", EXIT_ENGINE) from None
    elapsed = time.perf_counter() - t0
    doc = {"model": os.path.basename(args.model), "expressions": [e.to_json() for e in exprs]}
    _ensure_parent(args.out)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    for e in exprs:
        print(f"{e.requirement_id}: {e.function.to_infix()}")
    log.info("checked %d requirement(s) in %.3f s", len(exprs), elapsed)
    return EXIT_OK


# -- predict ----------------------------------------------------------------
def _load_expressions(path: str) -> List[PmcExpression]:
    try:
        doc = json.loads(_read(path))
        items = doc["expressions"] if isinstance(doc, dict) else doc
        return [PmcExpression.from_json(d) for d in items]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ParseError) as exc:
        raise CliError(f"{path}: not a valid expression file ({exc})", EXIT_PARSE) from None


def _forecaster(args) -> ForecasterSpec:
    try:
        if args.order:
            order = tuple(int(x) for x in args.order.split(","))
            if len(order) != 3:
                raise ValueError("order needs three integers p,d,q")
            return ForecasterSpec(args.method, order)
        return ForecasterSpec.parse(args.method)
    except (ConfigError, ValueError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _trajectory_csv_path(report_path: str) -> str:
    stem, _ = os.path.splitext(report_path)
    return stem + "_trajectory.csv"


def cmd_predict(args) -> int:
    model, reqs = _load_inputs(args.model, args.props)
    if args.horizon < 1:
        raise CliError("--horizon must be at least 1", EXIT_CONFIG)
    if args.tau < 0:
        raise CliError("--tau must be non-negative", EXIT_CONFIG)
    spec = _forecaster(args)
    if args.expr:
        exprs = _load_expressions(args.expr)
    else:
        try:
            exprs = check_all(model, reqs)
        except EngineError as exc:
            raise CliError(f"model checking failed: {exc}", EXIT_ENGINE) from None
    try:
        obs = ObservationSeries.from_csv(args.obs)
    except OSError as exc:
        raise CliError(f"cannot read {args.obs}: {exc.strerror}", EXIT_PARSE) from None
    except (ConfigError, ValueError, KeyError) as exc:
        raise CliError(f"{args.obs}: {exc}", EXIT_PARSE) from None
    t0 = time.perf_counter()
    try:
        results = predict(model, reqs, exprs, obs, args.horizon, spec, args.tau)
    except MissingParameterSeries as exc:
        raise CliError(str(exc), EXIT_MISSING) from None
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    elapsed = time.perf_counter() - t0

    report = {
        "now": obs.now,
        "horizon": args.horizon,
        "tau": args.tau,
        "forecaster": str(spec),
        "results": [r.to_json() for r in results],
    }
    _ensure_parent(args.out)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    traj_path = _trajectory_csv_path(args.out)
    with open(traj_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["minute"] + [r.requirement_id for r in results])
        for i in range(args.horizon):
            w.writerow([i + 1] + [f"{r.trajectory[i]:.10g}" for r in results])
    if not args.no_plots:
        from .plotting import plot_prediction

        plot_prediction(results, os.path.splitext(args.out)[0] + "_trajectory.png")

    print(f"{'req':<6}{'now':>12}{'t_p':>8}{'trigger':>9}")
    for r in results:
        t_p = "now" if r.violation_at_now else ("-" if r.t_p is None else str(r.t_p))
        trig = "-" if r.trigger_time is None else str(r.trigger_time)
        print(f"{r.requirement_id:<6}{r.value_now:>12.6g}{t_p:>8}{trig:>9}")
    log.info("prediction took %.3f s", elapsed)
    return EXIT_OK


# -- simulate / tausweep ----------------------------------------------------
def _experiment(args):
    from . import harness

    try:
        cfg = harness.load_config(args.config)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            cfg.jobs = args.jobs
        scenario = harness.load_scenario(cfg)
    except ConfigError as exc:
        raise CliError(f"invalid config: {exc}", EXIT_CONFIG) from None
    except (OSError, ParseError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_CONFIG) from None
    except EngineError as exc:
        raise CliError(f"model checking failed: {exc}", EXIT_ENGINE) from None
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    stats = harness.run_batch(cfg, scenario)
    log.info("%d run(s) in %.2f s", cfg.runs, time.perf_counter() - t0)
    return harness, cfg, scenario, stats


def _print_stats(stats) -> None:
    print(f"{'req':<6}{'before':>8}{'TP':>6}{'FP':>6}{'FN':>6}{'TN':>6}{'mean':>9}{'std':>9}")
    for rid, s in stats.requirements.items():
        c = s.counts
        mean = "-" if s.mean is None else f"{s.mean:.2f}"
        std = "-" if s.std is None else f"{s.std:.2f}"
        print(f"{rid:<6}{c['violation-before-prediction']:>8}{c['true-positive']:>6}{c['false-positive']:>6}"
              f"{c['false-negative']:>6}{c['true-negative']:>6}{mean:>9}{std:>9}")


def _print_sweep(sweep) -> None:
    rids = list(sweep)
    print("tau" + "".join(f"{r:>9}" for r in rids))
    taus = sorted({t for v in sweep.values() for t in v})
    for t in taus:
        cells = ["-" if sweep[r][t] is None else f"{sweep[r][t]:.1f}" for r in rids]
        print(f"{t:<3}" + "".join(f"{c:>9}" for c in cells))


def cmd_simulate(args) -> int:
    harness, cfg, scenario, stats = _experiment(args)
    out = args.out
    sweep = harness.tau_sweep(stats)
    harness.write_batch_csv(stats, os.path.join(out, "batch.csv"))
    harness.write_stats_json(stats, os.path.join(out, "stats.json"))
    harness.write_tau_csv(sweep, os.path.join(out, "tau_sweep.csv"))
    runs = [harness.run_experiment(cfg, i, scenario) for i in range(min(cfg.trajectories, cfg.runs))]
    for i, data in enumerate(runs):
        harness.write_trajectory_csv(data, cfg, os.path.join(out, f"trajectory_{i}.csv"))
    if not args.no_plots:
        from . import plotting

        for i, data in enumerate(runs):
            plotting.plot_run(data.truth, data.predicted, scenario.requirements, cfg.history,
                              os.path.join(out, f"trajectory_{i}.png"))
        plotting.plot_error_histograms({k: v.errors for k, v in stats.requirements.items()},
                                       os.path.join(out, "errors.png"))
        plotting.plot_tau_curve(sweep, os.path.join(out, "tau_sweep.png"))
    _print_stats(stats)
    return EXIT_OK


def cmd_tausweep(args) -> int:
    harness, cfg, scenario, stats = _experiment(args)
    sweep = harness.tau_sweep(stats)
    harness.write_batch_csv(stats, os.path.join(args.out, "batch.csv"))
    harness.write_tau_csv(sweep, os.path.join(args.out, "tau_sweep.csv"))
    if not args.no_plots:
        from .plotting import plot_tau_curve

        plot_tau_curve(sweep, os.path.join(args.out, "tau_sweep.png"))
    _print_sweep(sweep)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="presto", description="Predict requirement violations of a parametric DTMC.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log timings to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="compute closed-form expressions for every requirement")
    c.add_argument("--model", required=True)
    c.add_argument("--props", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("predict", help="forecast parameters and locate the first violation")
    r.add_argument("--model", required=True)
    r.add_argument("--props", required=True)
    r.add_argument("--expr", help="expressions from 'presto check' (recomputed when omitted)")
    r.add_argument("--obs", required=True, help="CSV with a 't' column and one column per parameter")
    r.add_argument("--horizon", type=int, default=240)
    r.add_argument("--tau", type=float, default=0.0)
    r.add_argument("--method", default="arima", help="drift, robust-linear, arima or arima(p,d,q)")
    r.add_argument("--order", help="ARIMA order as p,d,q (default 1,1,0)")
    r.add_argument("--out", required=True)
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_predict)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run a seeded batch of synthetic experiments"),
        ("tausweep", cmd_tausweep, "undesired-trigger percentage per tau"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--jobs", type=int)
        s.add_argument("--no-plots", action="store_true")
        s.set_defaults(func=func)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"presto: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
