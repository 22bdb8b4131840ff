"""Simulated listeners: psychometric functions, speechreading, audiovisual
integration, training and test-retest variability.

Word recognition is a logistic function of the presentation level. Seeing
the speaker contributes twice: an effective-level gain proportional to the
listener's speechreading score v, and probability summation with v itself,
which also bounds audiovisual performance from below (speech fully masked
by noise still yields the speechreading score). Acoustic audibility in
noise ends at the speech detection threshold of this material
(-16.9 dB SNR audio-only, about 3 dB lower with visual speech); below it
only v contributes. Training shifts the psychometric midpoint by
a * exp(-k / tau) after k prior audiovisual lists, and a per-track normal
midpoint jitter models test-retest variability.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .adaptive import Condition
from .mst import CATEGORIES, MatrixSentence, Response, WORDS_PER_CATEGORY

DETECTION_THRESHOLD_SNR = -16.9
AV_DETECTION_EXTENSION_DB = 3.0

DEFAULT_SIGMA = 1.0 / (4.0 * 0.15)  # logistic spread matching a 0.15/dB midpoint slope

# Effective-level gain per unit speechreading score. Calibrated so the
# default population's mean audiovisual benefit in noise is 5.0 dB; see
# scripts/calibrate_listener_model.py for the derivation.
DEFAULT_VISUAL_GAIN = 6.0


@dataclass(frozen=True)
class ListenerProfile:
    listener_id: int
    m50_noise: float
    m50_quiet: float
    v: float
    sigma: float = DEFAULT_SIGMA
    visual_gain: float = DEFAULT_VISUAL_GAIN
    training_amplitude: float = 4.0
    training_tau: float = 2.5
    retest_jitter: float = 1.4
    closed_set_gain: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.v <= 1.0:
            raise ValueError("speechreading score v must be in [0, 1]")
        if self.training_amplitude < 0 or self.training_tau <= 0:
            raise ValueError("training parameters out of range")


@dataclass(frozen=True)
class PopulationConfig:
    n_listeners: int = 28
    v_mean: float = 0.50
    v_std: float = 0.214
    m50_noise_mean: float = -9.4
    m50_noise_std: float = 1.0
    m50_quiet_mean: float = 15.3
    m50_quiet_std: float = 2.0
    sigma: float = DEFAULT_SIGMA
    visual_gain: float = DEFAULT_VISUAL_GAIN
    training_amplitude: float = 4.0
    training_tau: float = 2.5
    retest_jitter: float = 1.4
    closed_set_gain: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_listeners < 1:
            raise ValueError("need at least one listener")
        if min(self.v_std, self.m50_noise_std, self.m50_quiet_std) < 0:
            raise ValueError("standard deviations must be nonnegative")


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, lo: float, hi: float) -> float:
    if std == 0.0:
        return min(max(mean, lo), hi)
    while True:
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return float(x)


def sample_population(config: PopulationConfig, seed: int | None = None) -> list[ListenerProfile]:
    """Draw a deterministic population; v is normal truncated to [0, 1] by
    resampling."""
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng([int(seed), 0])
    profiles = []
    for i in range(config.n_listeners):
        v = _truncated_normal(rng, config.v_mean, config.v_std, 0.0, 1.0)
        m50_noise = float(rng.normal(config.m50_noise_mean, config.m50_noise_std))
        m50_quiet = float(rng.normal(config.m50_quiet_mean, config.m50_quiet_std))
        profiles.append(
            ListenerProfile(
                listener_id=i,
                m50_noise=m50_noise,
                m50_quiet=m50_quiet,
                v=v,
                sigma=config.sigma,
                visual_gain=config.visual_gain,
                training_amplitude=config.training_amplitude,
                training_tau=config.training_tau,
                retest_jitter=config.retest_jitter,
                closed_set_gain=config.closed_set_gain,
            )
        )
    return profiles


def effective_midpoint(profile: ListenerProfile, condition: Condition, trial_index: int, midpoint_jitter: float = 0.0) -> float:
    base = profile.m50_noise if condition.background == "noise" else profile.m50_quiet
    training = profile.training_amplitude * math.exp(-trial_index / profile.training_tau)
    return base + training + midpoint_jitter


def p_word(
    profile: ListenerProfile,
    level: float,
    condition: Condition,
    trial_index: int = 0,
    midpoint_jitter: float = 0.0,
) -> float:
    """Probability that one word is recognized at this presentation level.

    trial_index counts the listener's prior audiovisual lists (training
    transfers across modalities); midpoint_jitter is the per-track
    test-retest offset drawn by the session runner.
    """
    if condition.modality == "VO":
        return profile.v
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")

    m = effective_midpoint(profile, condition, trial_index, midpoint_jitter)
    visual = profile.visual_gain * profile.v if condition.modality == "AV" else 0.0
    closed = profile.closed_set_gain if condition.response_format == "closed" else 0.0
    x_eff = level + visual + closed

    p_audio = 1.0 / (1.0 + math.exp(-(x_eff - m) / profile.sigma))
    if condition.background == "noise":
        floor = DETECTION_THRESHOLD_SNR - (AV_DETECTION_EXTENSION_DB if condition.modality == "AV" else 0.0)
        if level < floor:
            p_audio = 0.0

    if condition.modality == "AV":
        return 1.0 - (1.0 - p_audio) * (1.0 - profile.v)
    return p_audio


def respond(
    profile: ListenerProfile,
    sentence: MatrixSentence,
    level: float,
    condition: Condition,
    trial_index: int,
    rng: np.random.Generator,
    midpoint_jitter: float = 0.0,
) -> Response:
    """One sentence response: each word independently correct with p_word.

    Wrong words become a uniformly random other index (closed set) or, half
    the time, a no-answer (open set); this shapes transcripts only, never
    the score.
    """
    p = p_word(profile, level, condition, trial_index, midpoint_jitter)
    correct = rng.random(len(CATEGORIES)) < p
    slots: list[int | None] = []
    for target, ok in zip(sentence.indices, correct):
        if ok:
            slots.append(target)
            continue
        if condition.response_format == "open" and rng.random() < 0.5:
            slots.append(None)
            continue
        wrong = int(rng.integers(WORDS_PER_CATEGORY - 1))
        slots.append(wrong + (wrong >= target))
    return tuple(slots)


def save_population_csv(profiles: list[ListenerProfile], path: str | Path) -> None:
    fields = [
        "listener_id",
        "m50_noise",
        "m50_quiet",
        "v",
        "sigma",
        "visual_gain",
        "training_amplitude",
        "training_tau",
        "retest_jitter",
        "closed_set_gain",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for profile in profiles:
            writer.writerow(asdict(profile))
