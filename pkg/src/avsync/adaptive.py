"""Adaptive level tracking toward the 80% speech reception threshold.

Speech starts at 60 dB SPL; masking noise, when present, is fixed at
65 dB SPL, so tracks in noise start at -5 dB SNR. After each sentence the
level moves by -f(r) * (p - 0.8) / s, where p is the fraction of words
correct, s = 0.15/dB is the assumed psychometric slope, and
f(r) = max(0.1, 1.5 * 1.41^-r) shrinks with the reversal count r. The SRT
estimate is the mean of the levels for sentences 11-20 plus the computed
but unpresented level 21; estimates below -20 dB SNR (noise) or 0 dB SPL
(quiet) are clamped to those bounds, because nothing acoustic is audible
below them. Presented levels themselves are only limited by generous hard
bounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .mst import word_percentage

MODALITIES = ("AO", "AV", "VO")
BACKGROUNDS = ("noise", "quiet")
FORMATS = ("closed", "open")


@dataclass(frozen=True)
class Condition:
    modality: str
    background: str
    response_format: str

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.background not in BACKGROUNDS:
            raise ValueError(f"unknown background {self.background!r}")
        if self.response_format not in FORMATS:
            raise ValueError(f"unknown response format {self.response_format!r}")
        if self.modality == "VO" and (self.background, self.response_format) != ("noise", "closed"):
            raise ValueError("the visual-only condition exists only as noise + closed-set")

    @property
    def name(self) -> str:
        return f"{self.modality}{self.background.capitalize()}{self.response_format.capitalize()}"

    @property
    def adaptive(self) -> bool:
        return self.modality != "VO"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        for modality in MODALITIES:
            for background in BACKGROUNDS:
                for fmt in FORMATS:
                    if name == f"{modality}{background.capitalize()}{fmt.capitalize()}":
                        return cls(modality, background, fmt)
        raise ValueError(f"unknown condition name {name!r}")


ALL_CONDITIONS = tuple(
    Condition(m, b, f)
    for m in MODALITIES
    for b in BACKGROUNDS
    for f in FORMATS
    if not (m == "VO" and (b, f) != ("noise", "closed"))
)
ADAPTIVE_CONDITIONS = tuple(c for c in ALL_CONDITIONS if c.adaptive)


@dataclass(frozen=True)
class AdaptiveConfig:
    speech_start_spl: float = 60.0
    noise_spl: float = 65.0
    target: float = 0.8
    slope_per_db: float = 0.15
    step_scale: float = 1.5
    step_decay: float = 1.41
    step_floor: float = 0.1
    snr_bounds: tuple[float, float] = (-40.0, 20.0)
    spl_bounds: tuple[float, float] = (-20.0, 90.0)
    clamp_snr: float = -20.0
    clamp_spl: float = 0.0
    list_length: int = 20

    def start_level(self, condition: Condition) -> float:
        if condition.background == "noise":
            return self.speech_start_spl - self.noise_spl
        return self.speech_start_spl

    def hard_bounds(self, condition: Condition) -> tuple[float, float]:
        return self.snr_bounds if condition.background == "noise" else self.spl_bounds

    def clamp_bound(self, condition: Condition) -> float:
        return self.clamp_snr if condition.background == "noise" else self.clamp_spl


@dataclass
class AdaptiveTrack:
    condition: Condition
    config: AdaptiveConfig = AdaptiveConfig()
    levels: list[float] = field(default_factory=list)
    words_correct: list[int] = field(default_factory=list)
    reversals: int = 0
    reversal_history: list[int] = field(default_factory=list)
    last_direction: int = 0
    srt_raw: float | None = None
    srt_clamped: float | None = None
    clamped: bool = False

    @property
    def current_level(self) -> float:
        if not self.condition.adaptive:
            raise ValueError("a visual-only track has no adaptive level")
        return self.levels[-1]


@dataclass(frozen=True)
class SrtEstimate:
    srt_raw: float
    srt_clamped: float
    clamped: bool


def init_track(condition: Condition, config: AdaptiveConfig = AdaptiveConfig()) -> AdaptiveTrack:
    track = AdaptiveTrack(condition, config)
    if condition.adaptive:
        track.levels.append(config.start_level(condition))
    return track


def step_size(reversals: int, config: AdaptiveConfig = AdaptiveConfig()) -> float:
    return max(config.step_floor, config.step_scale * config.step_decay ** (-reversals))


def update_level(track: AdaptiveTrack, words_correct: int) -> float:
    """Record one response and return the next presentation level.

    The step is computed with the reversal count as it stood before this
    response; a sign change then increments the count for later steps.
    """
    if not track.condition.adaptive:
        raise ValueError("cannot adapt a visual-only track")
    if len(track.words_correct) >= track.config.list_length:
        raise ValueError("track already has a full list of responses")
    if not 0 <= words_correct <= 5:
        raise ValueError("words_correct must be 0..5")

    cfg = track.config
    p = words_correct / 5.0
    delta = -step_size(track.reversals, cfg) * (p - cfg.target) / cfg.slope_per_db
    direction = (delta > 0) - (delta < 0)
    if direction != 0:
        if track.last_direction != 0 and direction != track.last_direction:
            track.reversals += 1
        track.last_direction = direction

    lo, hi = cfg.hard_bounds(track.condition)
    next_level = min(max(track.current_level + delta, lo), hi)
    track.words_correct.append(words_correct)
    track.reversal_history.append(track.reversals)
    track.levels.append(next_level)
    return next_level


def estimate_srt(track: AdaptiveTrack) -> SrtEstimate:
    """Mean of the last 10 presented levels plus the virtual next one,
    clamped at the audibility bound for the track's background."""
    if not track.condition.adaptive:
        raise ValueError("a visual-only track has no SRT; use vo_score")
    n = track.config.list_length
    if len(track.words_correct) < n:
        raise DataError(f"incomplete track: {len(track.words_correct)}/{n} responses")
    tail = track.levels[n // 2 : n + 1]
    srt_raw = sum(tail) / len(tail)
    bound = track.config.clamp_bound(track.condition)
    clamped = srt_raw < bound
    estimate = SrtEstimate(srt_raw, max(srt_raw, bound), clamped)
    track.srt_raw = estimate.srt_raw
    track.srt_clamped = estimate.srt_clamped
    track.clamped = estimate.clamped
    return estimate


def record_vo_response(track: AdaptiveTrack, words_correct: int) -> None:
    if track.condition.adaptive:
        raise ValueError("record_vo_response applies to visual-only tracks")
    if len(track.words_correct) >= track.config.list_length:
        raise ValueError("track already has a full list of responses")
    if not 0 <= words_correct <= 5:
        raise ValueError("words_correct must be 0..5")
    track.words_correct.append(words_correct)
    track.reversal_history.append(0)


def vo_score(track: AdaptiveTrack) -> float:
    """Percent words correct over the visual-only list."""
    if track.condition.adaptive:
        raise ValueError("vo_score applies to visual-only tracks")
    n = track.config.list_length
    if len(track.words_correct) < n:
        raise DataError(f"incomplete track: {len(track.words_correct)}/{n} responses")
    return word_percentage(track.words_correct)


def write_track_csv(track: AdaptiveTrack, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_idx", "level", "words_correct", "reversals"])
        for i, wc in enumerate(track.words_correct):
            level = track.levels[i] if track.condition.adaptive else track.config.noise_spl
            writer.writerow([i + 1, f"{level:.3f}", wc, track.reversal_history[i]])
