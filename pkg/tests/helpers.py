"""Shared test fixtures: synthetic speech-like audio, corpora on disk, and
independent oracles."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from avsync.audio_io import AudioBuffer, from_mono, save_wav
from avsync.selection import TakeCorpus

RATE = 48000
HOP_SECONDS = 0.023


_SYLLABLE_DURATIONS = (0.125, 0.095, 0.140, 0.105, 0.085, 0.130, 0.100, 0.115)
_GAP_DURATIONS = (0.030, 0.045, 0.025, 0.050)


def sentence_audio(seed: int, rate: int = RATE, n_syllables: int = 8, tempo: float = 1.0) -> AudioBuffer:
    """Tone-burst 'syllables' with sentence-specific frequencies.

    The rhythm is a fixed pattern scaled by tempo, so a sentence's length is
    deterministic in its tempo. Giving each fixture sentence a distinct
    tempo forces cross-sentence alignments to warp (distinct frame counts),
    keeping mismatched asynchrony scores well above matched ones.
    """
    rng = np.random.default_rng(seed)
    segments = []
    for k in range(n_syllables):
        f = rng.uniform(200.0, 4000.0)
        dur = tempo * _SYLLABLE_DURATIONS[k % len(_SYLLABLE_DURATIONS)]
        gap = tempo * _GAP_DURATIONS[k % len(_GAP_DURATIONS)]
        t = np.arange(int(dur * rate)) / rate
        segments.append(0.4 * np.sin(2 * np.pi * f * t) * np.hanning(t.size))
        segments.append(np.zeros(int(gap * rate)))
    return from_mono(np.concatenate(segments), rate)


def perturbed(audio: AudioBuffer, seed: int, delay_seconds: float = 0.0, noise_db: float = -45.0) -> AudioBuffer:
    """A dubbed-take stand-in: small level change, low noise, optional delay."""
    rng = np.random.default_rng(seed)
    x = audio.channel(0) * 0.9
    x = x + rng.normal(0.0, 10 ** (noise_db / 20), x.size)
    pad = int(round(delay_seconds * audio.sample_rate))
    return from_mono(np.concatenate([np.zeros(pad), x]).clip(-1, 1), audio.sample_rate)


def build_corpus(
    root: Path,
    n_sentences: int,
    n_takes: int,
    outlier_delays: dict[str, float] | None = None,
    seed: int = 0,
) -> TakeCorpus:
    """Write originals and takes as WAV files under root.

    Takes are perturbed copies with increasing sub-hop delays, so take t1
    always scores best. Sentences named in outlier_delays get that delay
    added to every take.
    """
    outlier_delays = outlier_delays or {}
    root.mkdir(parents=True, exist_ok=True)
    originals: dict[str, Path] = {}
    takes: dict[tuple[str, str], Path] = {}
    for i in range(n_sentences):
        sid = f"s{i + 1:03d}"
        audio = sentence_audio(seed * 1000 + i, tempo=0.75 + 0.05 * i)
        path = root / f"{sid}_orig.wav"
        save_wav(path, audio)
        originals[sid] = path
        base_delay = outlier_delays.get(sid, 0.0)
        for j in range(n_takes):
            tid = f"t{j + 1}"
            take = perturbed(audio, seed=seed * 1000 + i * 10 + j, delay_seconds=base_delay + j * HOP_SECONDS / 4)
            tpath = root / f"{sid}_{tid}.wav"
            save_wav(tpath, take)
            takes[(sid, tid)] = tpath
    return TakeCorpus(originals, takes)


def write_manifest_csv(corpus: TakeCorpus, path: Path) -> Path:
    lines = ["kind,sentence_id,take_id,path"]
    for sid in corpus.sentence_ids:
        lines.append(f"original,{sid},,{corpus.originals[sid]}")
    for (sid, tid) in sorted(corpus.takes):
        lines.append(f"take,{sid},{tid},{corpus.takes[(sid, tid)]}")
    path.write_text("\n".join(lines) + "\n")
    return path


def brute_force_min_cost(dist: np.ndarray) -> float:
    """Exhaustive enumeration of every admissible warp path, accumulating
    the cost forward from (0, 0) exactly like the dynamic program."""
    n, m = dist.shape
    d = dist.tolist()
    best = [float("inf")]

    def walk(i: int, j: int, acc: float) -> None:
        if i == n - 1 and j == m - 1:
            if acc < best[0]:
                best[0] = acc
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc + d[i + 1][j + 1])
        if i + 1 < n:
            walk(i + 1, j, acc + d[i + 1][j])
        if j + 1 < m:
            walk(i, j + 1, acc + d[i][j + 1])

    walk(0, 0, d[0][0])
    return best[0]
