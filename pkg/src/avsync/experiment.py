"""Full test/retest session orchestration and summary statistics.

Session 1 opens with four audiovisual-in-noise training lists in the
listener's assigned response format, followed by the nine measurement
conditions: first the conditions sharing the training format, then the
others, pseudo-randomly ordered within each format group. Session 2
repeats the layout with a single training list. Lists are assigned
round-robin so none repeats within a session. All randomness flows from
one master seed through namespaced per-listener, per-track streams, so
results do not depend on execution order or parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .adaptive import (
    AdaptiveConfig,
    Condition,
    estimate_srt,
    init_track,
    record_vo_response,
    update_level,
    vo_score,
)
from .errors import DataError
from .listener import ListenerProfile, PopulationConfig, respond, sample_population
from .mst import TestList, default_word_matrix, generate_lists, score_response

TRAINING_CONDITION_BY_FORMAT = {
    "closed": Condition("AV", "noise", "closed"),
    "open": Condition("AV", "noise", "open"),
}
CONDITIONS_BY_FORMAT = {
    "closed": [
        Condition("AO", "noise", "closed"),
        Condition("AO", "quiet", "closed"),
        Condition("AV", "noise", "closed"),
        Condition("AV", "quiet", "closed"),
        Condition("VO", "noise", "closed"),
    ],
    "open": [
        Condition("AO", "noise", "open"),
        Condition("AO", "quiet", "open"),
        Condition("AV", "noise", "open"),
        Condition("AV", "quiet", "open"),
    ],
}
TRAINING_LISTS_SESSION_1 = 4
TRAINING_LISTS_SESSION_2 = 1

# Published human evaluation statistics for this audiovisual material.
# Printed in reports for comparison only; individual audiovisual
# integration is not something the simulation claims to reproduce.
HUMAN_REFERENCE = {
    "srt": {
        "AONoiseClosed": {"mean": -7.9, "std": 2.5},
        "AONoiseOpen": {"mean": -8.8, "std": 1.1},
        "AVNoiseClosed": {"mean": -13.4, "std": 3.2},
        "AVNoiseOpen": {"mean": -12.9, "std": 3.4},
        "AOQuietClosed": {"mean": 17.6, "std": 3.2},
        "AOQuietOpen": {"mean": 17.8, "std": 2.4},
        "AVQuietClosed": {"mean": 10.9, "std": 4.4},
        "AVQuietOpen": {"mean": 10.5, "std": 4.6},
    },
    "av_benefit": {"noise": 5.0, "quiet": 7.0},
    "vo_scores": {"min": 0.0, "max": 84.0, "mean": 50.0, "std": 21.4},
    "clamped_trials": {"clamped": 18, "total": 366, "fraction": 0.049},
    "correlation_v_vs_srt": {
        "AVNoiseClosed": -0.66,
        "AVNoiseOpen": -0.69,
        "AVQuietClosed": -0.65,
        "AVQuietOpen": -0.65,
    },
    "training_improvement_db": {"trial_3": -1.6, "test": -2.9, "retest_trial": -3.8},
}


@dataclass(frozen=True)
class SimConfig:
    population: PopulationConfig = PopulationConfig()
    adaptive: AdaptiveConfig = AdaptiveConfig()
    n_lists: int = 45
    closed_training_count: int | None = None  # None: 13/28 of the population

    def resolved_closed_count(self) -> int:
        if self.closed_training_count is not None:
            return self.closed_training_count
        return int(round(13 / 28 * self.population.n_listeners))

    def to_dict(self) -> dict:
        adaptive = asdict(self.adaptive)
        for key in ("snr_bounds", "spl_bounds"):
            adaptive[key] = list(adaptive[key])  # JSON-stable
        return {
            "population": asdict(self.population),
            "adaptive": adaptive,
            "n_lists": self.n_lists,
            "closed_training_count": self.closed_training_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        adaptive = dict(data.get("adaptive", {}))
        for key in ("snr_bounds", "spl_bounds"):
            if key in adaptive:
                adaptive[key] = tuple(adaptive[key])
        return cls(
            population=PopulationConfig(**data.get("population", {})),
            adaptive=AdaptiveConfig(**adaptive),
            n_lists=data.get("n_lists", 45),
            closed_training_count=data.get("closed_training_count"),
        )


def load_sim_config(path: str | Path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return SimConfig.from_dict(json.load(fh))


def save_sim_config(config: SimConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class TrackSpec:
    session: int  # 1 = test, 2 = retest
    condition: Condition
    list_id: str
    training_index: int | None  # 1..5 for training lists, None otherwise


@dataclass
class SessionPlan:
    lists: dict[str, TestList]
    trained_format: list[str]
    specs: list[list[TrackSpec]] = field(default_factory=list)
    adaptive: AdaptiveConfig = AdaptiveConfig()

    @property
    def n_av_tracks(self) -> int:
        return sum(1 for per_listener in self.specs for s in per_listener if s.condition.modality == "AV")


def build_session_plan(config: SimConfig, seed: int) -> SessionPlan:
    """Assign training formats, condition orders, and lists for everyone."""
    n = config.population.n_listeners
    lists = generate_lists(default_word_matrix(), config.n_lists, seed=[seed, 3])
    lists_per_session = max(TRAINING_LISTS_SESSION_1, TRAINING_LISTS_SESSION_2) + sum(
        len(v) for v in CONDITIONS_BY_FORMAT.values()
    )
    if config.n_lists < lists_per_session:
        raise DataError(f"plan needs {lists_per_session} lists per session, only {config.n_lists} available")

    rng = np.random.default_rng([int(seed), 2])
    n_closed = min(config.resolved_closed_count(), n)
    closed_ids = set(rng.choice(n, size=n_closed, replace=False).tolist())
    trained = ["closed" if i in closed_ids else "open" for i in range(n)]

    list_ids = sorted(lists_by_id := {tl.list_id: tl for tl in lists})
    cursor = 0

    def next_list() -> str:
        nonlocal cursor
        lid = list_ids[cursor % len(list_ids)]
        cursor += 1
        return lid

    plan = SessionPlan(lists=lists_by_id, trained_format=trained, adaptive=config.adaptive)
    training_counts = {1: TRAINING_LISTS_SESSION_1, 2: TRAINING_LISTS_SESSION_2}
    for i in range(n):
        fmt = trained[i]
        other = "open" if fmt == "closed" else "closed"
        per_listener: list[TrackSpec] = []
        trained_so_far = 0
        for session in (1, 2):
            for _ in range(training_counts[session]):
                trained_so_far += 1
                per_listener.append(
                    TrackSpec(session, TRAINING_CONDITION_BY_FORMAT[fmt], next_list(), trained_so_far)
                )
            for group in (fmt, other):
                order = rng.permutation(len(CONDITIONS_BY_FORMAT[group]))
                for k in order:
                    per_listener.append(TrackSpec(session, CONDITIONS_BY_FORMAT[group][k], next_list(), None))
        plan.specs.append(per_listener)
    return plan


def _run_track(
    profile: ListenerProfile,
    spec: TrackSpec,
    test_list: TestList,
    av_exposures: int,
    adaptive_config: AdaptiveConfig,
    rng: np.random.Generator,
) -> dict:
    condition = spec.condition
    jitter = float(rng.normal(0.0, profile.retest_jitter)) if profile.retest_jitter > 0 else 0.0
    track = init_track(condition, adaptive_config)
    for sentence in test_list.sentences:
        level = track.current_level if condition.adaptive else 0.0
        response = respond(profile, sentence, level, condition, av_exposures, rng, jitter)
        wc = score_response(sentence, response)
        if condition.adaptive:
            update_level(track, wc)
        else:
            record_vo_response(track, wc)

    record = {
        "listener_id": profile.listener_id,
        "session": spec.session,
        "condition": condition.name,
        "list_id": spec.list_id,
        "training_index": spec.training_index,
        "trial_index": av_exposures,
        "midpoint_jitter": jitter,
        "words_correct": track.words_correct,
        "reversals": track.reversals,
    }
    if condition.adaptive:
        estimate = estimate_srt(track)
        record.update(
            {
                "levels": track.levels,
                "srt_raw": estimate.srt_raw,
                "srt_clamped": estimate.srt_clamped,
                "clamped": estimate.clamped,
                "vo_percent": None,
            }
        )
    else:
        record.update(
            {
                "levels": [],
                "srt_raw": None,
                "srt_clamped": None,
                "clamped": False,
                "vo_percent": vo_score(track),
            }
        )
    return record


def run_experiment(
    population: list[ListenerProfile],
    plan: SessionPlan,
    seed: int,
    config: SimConfig | None = None,
) -> dict:
    """Simulate every track of every listener. Deterministic in
    (population, plan, seed); each track draws from its own stream, so the
    result is independent of execution interleaving."""
    if len(plan.specs) != len(population):
        raise DataError(f"plan covers {len(plan.specs)} listeners, population has {len(population)}")
    tracks = []
    for profile, per_listener in zip(population, plan.specs):
        av_exposures = 0
        for ordinal, spec in enumerate(per_listener):
            rng = np.random.default_rng([int(seed), 1, profile.listener_id, ordinal])
            record = _run_track(profile, spec, plan.lists[spec.list_id], av_exposures, plan.adaptive, rng)
            record["ordinal"] = ordinal
            tracks.append(record)
            if spec.condition.modality == "AV":
                av_exposures += 1

    listeners = []
    for profile, fmt in zip(population, plan.trained_format):
        entry = asdict(profile)
        entry["trained_format"] = fmt
        listeners.append(entry)

    raw = {"seed": seed, "listeners": listeners, "tracks": tracks}
    if config is not None:
        raw["config"] = config.to_dict()
    return raw


def simulate(config: SimConfig, seed: int) -> dict:
    """Sample a population, build the plan, run both sessions."""
    population = sample_population(config.population, seed)
    plan = build_session_plan(config, seed)
    return run_experiment(population, plan, seed, config=config)


def pearson_r(x, y) -> float:
    """Sample Pearson correlation; undefined for constant input."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ValueError("need at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float((dx * dx).sum()) * float((dy * dy).sum()))
    if denom == 0.0:
        raise ValueError("correlation undefined for constant input")
    return float((dx * dy).sum() / denom)


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    rms: float


def descriptive(values) -> DescriptiveStats:
    """Mean, sample standard deviation (n-1), and root mean square."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values")
    if arr.size < 2:
        raise ValueError("standard deviation of a singleton is undefined")
    return DescriptiveStats(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)),
        rms=float(np.sqrt(np.mean(arr * arr))),
    )


def _condition_tracks(raw: dict, name: str, sessions=(1, 2)) -> list[dict]:
    return [
        t
        for t in raw["tracks"]
        if t["condition"] == name and t["training_index"] is None and t["session"] in sessions
    ]


def summarize(raw: dict) -> dict:
    """Aggregate raw results into the experiment report. Pure function of
    the raw-results dict."""
    listeners = {entry["listener_id"]: entry for entry in raw["listeners"]}
    report: dict = {"seed": raw.get("seed"), "n_listeners": len(listeners)}
    if "config" in raw:
        report["config"] = raw["config"]

    condition_names = sorted({t["condition"] for t in raw["tracks"] if t["srt_clamped"] is not None})
    conditions = {}
    for name in condition_names:
        tracks = _condition_tracks(raw, name)
        srts = [t["srt_clamped"] for t in tracks]
        entry = {"n": len(srts)}
        if len(srts) >= 2:
            stats = descriptive(srts)
            entry.update({"mean_srt": stats.mean, "std_srt": stats.std})
        diffs = []
        by_listener: dict[int, dict[int, float]] = {}
        for t in tracks:
            by_listener.setdefault(t["listener_id"], {})[t["session"]] = t["srt_clamped"]
        for sessions_map in by_listener.values():
            if 1 in sessions_map and 2 in sessions_map:
                diffs.append(sessions_map[1] - sessions_map[2])
        if len(diffs) >= 2:
            stats = descriptive(diffs)
            entry.update({"test_retest_mean": stats.mean, "test_retest_std": stats.std})
        conditions[name] = entry
    report["conditions"] = conditions

    av_tracks = [t for t in raw["tracks"] if t["condition"].startswith("AV")]
    clamped = sum(1 for t in av_tracks if t["clamped"])
    report["clamping"] = {
        "clamped": clamped,
        "total_av_tracks": len(av_tracks),
        "fraction": clamped / len(av_tracks) if av_tracks else 0.0,
    }

    vo_by_listener: dict[int, list[float]] = {}
    for t in raw["tracks"]:
        if t["vo_percent"] is not None:
            vo_by_listener.setdefault(t["listener_id"], []).append(t["vo_percent"])
    vo_scores = [sum(scores) / len(scores) for scores in vo_by_listener.values()]
    if len(vo_scores) >= 2:
        stats = descriptive(vo_scores)
        report["vo_scores"] = {
            "min": min(vo_scores),
            "max": max(vo_scores),
            "mean": stats.mean,
            "std": stats.std,
            "per_listener": {lid: sum(s) / len(s) for lid, s in sorted(vo_by_listener.items())},
        }

    correlations = {}
    for name in condition_names:
        if not name.startswith("AV"):
            continue
        pairs = [(listeners[t["listener_id"]]["v"], t["srt_clamped"]) for t in _condition_tracks(raw, name)]
        if len(pairs) >= 3:
            v_vals, srt_vals = zip(*pairs)
            try:
                correlations[name] = pearson_r(v_vals, srt_vals)
            except ValueError:
                correlations[name] = None
    report["correlations_v_vs_srt"] = correlations

    benefits: dict[str, list[float]] = {"noise": [], "quiet": []}
    for background in ("noise", "quiet"):
        for fmt in ("closed", "open"):
            suffix = f"{background.capitalize()}{fmt.capitalize()}"
            ao = {(t["listener_id"], t["session"]): t["srt_clamped"] for t in _condition_tracks(raw, f"AO{suffix}")}
            av = {(t["listener_id"], t["session"]): t["srt_clamped"] for t in _condition_tracks(raw, f"AV{suffix}")}
            for key in sorted(ao.keys() & av.keys()):
                benefits[background].append(ao[key] - av[key])
    report["av_benefit"] = {
        bg: {"mean": descriptive(vals).mean, "std": descriptive(vals).std, "n": len(vals)}
        for bg, vals in benefits.items()
        if len(vals) >= 2
    }

    curve: dict[int, list[float]] = {}
    for t in raw["tracks"]:
        if t["training_index"] is not None and t["srt_clamped"] is not None:
            curve.setdefault(t["training_index"], []).append(t["srt_clamped"])
    report["training_curve"] = {
        str(idx): sum(vals) / len(vals) for idx, vals in sorted(curve.items())
    }

    report["reference"] = HUMAN_REFERENCE
    return report


def write_json(data: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report: dict, path: str | Path) -> None:
    """Per-condition flat export of the report's headline numbers."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["condition", "n", "mean_srt", "std_srt", "test_retest_mean", "test_retest_std", "reference_mean", "reference_std"]
        )
        for name, entry in sorted(report["conditions"].items()):
            ref = HUMAN_REFERENCE["srt"].get(name, {})
            writer.writerow(
                [
                    name,
                    entry.get("n", 0),
                    _fmt(entry.get("mean_srt")),
                    _fmt(entry.get("std_srt")),
                    _fmt(entry.get("test_retest_mean")),
                    _fmt(entry.get("test_retest_std")),
                    _fmt(ref.get("mean")),
                    _fmt(ref.get("std")),
                ]
            )


def _fmt(value) -> str:
    return "" if value is None else f"{value:.3f}"
