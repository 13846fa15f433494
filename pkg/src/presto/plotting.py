"""PNG renderings of harness and predictor outputs (headless Agg backend)."""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .properties import Requirement  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_run(truth: Mapping[str, np.ndarray], predicted: Mapping[str, np.ndarray],
             requirements: Sequence[Requirement], history: int, path) -> None:
    """Actual vs predicted property values around the prediction time (minute 0)."""
    reqs = [r for r in requirements if r.id in truth]
    fig, axes = plt.subplots(len(reqs), 1, figsize=(7, 2.4 * len(reqs)), sharex=True, squeeze=False)
    for ax, req in zip(axes[:, 0], reqs):
        actual = np.asarray(truth[req.id])
        x = np.arange(1, len(actual) + 1) - history
        ax.plot(x, actual, color="0.3", lw=1, label="actual")
        pred = np.asarray(predicted[req.id])
        ax.plot(np.arange(1, len(pred) + 1), pred, color="tab:red", lw=1.2, ls="--", label="predicted")
        ax.axhline(req.threshold, color="tab:blue", lw=0.8, ls=":")
        ax.axvline(0, color="0.6", lw=0.8)
        ax.set_ylabel(req.id)
    axes[0, 0].legend(loc="best", fontsize=8)
    axes[-1, 0].set_xlabel("minutes from prediction time")
    _save(fig, path)


def plot_prediction(results, path) -> None:
    """Predicted trajectories from a single ``predict`` call."""
    fig, axes = plt.subplots(len(results), 1, figsize=(7, 2.2 * len(results)), sharex=True, squeeze=False)
    for ax, res in zip(axes[:, 0], results):
        ax.plot(np.arange(1, res.horizon + 1), res.trajectory, color="tab:red", lw=1.2)
        ax.axhline(res.threshold, color="tab:blue", lw=0.8, ls=":")
        if res.t_p is not None:
            ax.axvline(res.t_p, color="0.4", lw=0.8, ls="--")
        ax.set_ylabel(res.requirement_id)
    axes[-1, 0].set_xlabel("minutes ahead")
    _save(fig, path)


def plot_error_histograms(errors: Mapping[str, Sequence[int]], path, width: int = 5) -> None:
    ids = [k for k, v in errors.items() if len(v)]
    fig, axes = plt.subplots(1, max(1, len(ids)), figsize=(3.2 * max(1, len(ids)), 2.8), squeeze=False)
    for ax, rid in zip(axes[0], ids):
        e = np.asarray(errors[rid])
        lo = np.floor(e.min() / width) * width
        hi = np.floor(e.max() / width) * width + width
        ax.hist(e, bins=np.arange(lo, hi + width, width), color="tab:gray", edgecolor="white")
        ax.set_title(f"{rid} (n={len(e)})", fontsize=9)
        ax.set_xlabel("t_p - t_ref (min)")
    if not ids:
        axes[0, 0].text(0.5, 0.5, "no true positives", ha="center", va="center")
    _save(fig, path)


def plot_noise_errors(by_level: Mapping[int, Sequence[int]], path) -> None:
    levels = sorted(by_level)
    fig, ax = plt.subplots(figsize=(6, 3))
    data = [np.asarray(by_level[lv], dtype=float) for lv in levels]
    ax.boxplot([d if len(d) else [np.nan] for d in data], showfliers=True)
    ax.set_xticks(range(1, len(levels) + 1), [str(lv) for lv in levels])
    ax.set_xlabel("noise level")
    ax.set_ylabel("t_p - t_ref (min)")
    _save(fig, path)


def plot_tau_curve(sweep: Mapping[str, Mapping[int, Optional[float]]], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3))
    for rid, curve in sweep.items():
        pts = [(t, v) for t, v in sorted(curve.items()) if v is not None]
        if pts:
            ax.plot(*zip(*pts), marker="o", ms=3, label=rid)
    ax.set_xlabel("tau (min)")
    ax.set_ylabel("undesired cases (%)")
    ax.set_ylim(0, 105)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    _save(fig, path)
