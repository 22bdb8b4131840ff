"""Matplotlib renderings of the report data, written next to the CSV/JSON
outputs. Everything uses the Agg backend so the CLI works headless."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import HUMAN_REFERENCE


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_score_distributions(distributions: dict[str, list[float]], path: str | Path) -> Path:
    """Box plot of asynchrony score distributions, log-scaled seconds."""
    labels = list(distributions)
    data = [np.maximum(np.asarray(distributions[k], dtype=float), 1e-6) for k in labels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot(data, tick_labels=[f"{k}\n(n={len(d)})" for k, d in zip(labels, data)], whis=(0, 100))
    ax.set_yscale("log")
    ax.set_ylabel("asynchrony score [s]")
    ax.axhline(0.060, color="tab:red", lw=0.8, ls="--", label="outlier threshold")
    ax.legend(loc="upper left", fontsize=8)
    return _finish(fig, path)


def plot_selection_scores(sentences: list[dict], threshold: float, path: str | Path) -> Path:
    """Per-sentence best-take scores, raw vs corrected."""
    ids = [s["sentence_id"] for s in sentences]
    raw = [s["raw_seconds"] for s in sentences]
    corrected = [s["corrected_seconds"] for s in sentences]
    x = np.arange(len(ids))
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(ids)), 4))
    ax.bar(x - 0.2, raw, width=0.4, label="raw")
    ax.bar(x + 0.2, corrected, width=0.4, label="corrected")
    ax.axhline(threshold, color="tab:red", lw=0.8, ls="--", label=f"threshold {threshold * 1000:.0f} ms")
    ax.set_xticks(x)
    ax.set_xticklabels(ids, rotation=90, fontsize=7)
    ax.set_ylabel("asynchrony score [s]")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_training_curve(curve: dict[str, float], path: str | Path) -> Path:
    trials = sorted(curve, key=int)
    values = [curve[t] for t in trials]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([int(t) for t in trials], values, "o-")
    ax.set_xlabel("training list")
    ax.set_ylabel("mean SRT [dB SNR]")
    ax.set_xticks([int(t) for t in trials])
    return _finish(fig, path)


def plot_vo_distribution(scores: list[float], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(scores, bins=np.arange(0, 105, 5), edgecolor="black")
    ax.axvline(float(np.mean(scores)), color="tab:red", lw=1.0, label=f"mean {np.mean(scores):.1f}%")
    ax.set_xlabel("speechreading score [% words]")
    ax.set_ylabel("listeners")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_benefit_scatter(points: dict[str, tuple[list[float], list[float]]], path: str | Path) -> Path:
    """Speechreading score against audiovisual SRT, one panel per condition."""
    names = sorted(points)
    ncols = 2
    nrows = (len(names) + 1) // 2
    fig, axes = plt.subplots(nrows, ncols, figsize=(8, 3.2 * nrows), squeeze=False)
    for ax, name in zip(axes.flat, names):
        v, srt = points[name]
        ax.scatter(np.asarray(v) * 100.0, srt, s=14, alpha=0.7)
        ref = HUMAN_REFERENCE["correlation_v_vs_srt"].get(name)
        title = name if ref is None else f"{name} (human r = {ref})"
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("speechreading score [%]")
        ax.set_ylabel("SRT [dB]")
    for ax in axes.flat[len(names) :]:
        ax.axis("off")
    return _finish(fig, path)


def plot_adaptive_tracks(tracks: list[dict], path: str | Path, max_tracks: int = 60) -> Path:
    """Level trajectories for audiovisual tracks, noise and quiet panels,
    with the audibility bounds marked."""
    fig, (ax_noise, ax_quiet) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    counts = {"noise": 0, "quiet": 0}
    for t in tracks:
        if not t["condition"].startswith("AV") or not t["levels"]:
            continue
        background = "noise" if "Noise" in t["condition"] else "quiet"
        if counts[background] >= max_tracks:
            continue
        counts[background] += 1
        ax = ax_noise if background == "noise" else ax_quiet
        ax.plot(range(1, len(t["levels"]) + 1), t["levels"], lw=0.7, alpha=0.5)
    ax_noise.axhline(-20.0, color="tab:blue", lw=1.2)
    ax_noise.set_ylabel("SNR [dB]")
    ax_noise.set_title("audiovisual in noise", fontsize=9)
    ax_quiet.axhline(0.0, color="tab:blue", lw=1.2)
    ax_quiet.set_ylabel("speech level [dB SPL]")
    ax_quiet.set_title("audiovisual in quiet", fontsize=9)
    ax_quiet.set_xlabel("sentence")
    return _finish(fig, path)


def render_report_figures(raw: dict, report: dict, out_dir: str | Path) -> list[Path]:
    """All simulation-report figures into a directory."""
    out_dir = Path(out_dir)
    written = []
    if report.get("training_curve"):
        written.append(plot_training_curve(report["training_curve"], out_dir / "training_curve.png"))
    if "vo_scores" in report:
        written.append(
            plot_vo_distribution(list(report["vo_scores"]["per_listener"].values()), out_dir / "vo_scores.png")
        )
    v_by_listener = {entry["listener_id"]: entry["v"] for entry in raw["listeners"]}
    points: dict[str, tuple[list[float], list[float]]] = {}
    for t in raw["tracks"]:
        if t["condition"].startswith("AV") and t["training_index"] is None and t["srt_clamped"] is not None:
            v_list, srt_list = points.setdefault(t["condition"], ([], []))
            v_list.append(v_by_listener[t["listener_id"]])
            srt_list.append(t["srt_clamped"])
    if points:
        written.append(plot_benefit_scatter(points, out_dir / "benefit_scatter.png"))
    written.append(plot_adaptive_tracks(raw["tracks"], out_dir / "adaptive_tracks.png"))
    return written
