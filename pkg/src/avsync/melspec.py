"""Mel spectrogram features for the asynchrony analysis.

Defaults: 46 ms Hann windows with a 23 ms hop, 64 triangular bands spaced
on the HTK mel scale (2595 * log10(1 + f/700)) between 50 Hz and 8 kHz,
natural-log compression, and per-band mean subtraction over the utterance.
The mean subtraction makes warped-path distances reflect timing rather
than recording level, since a global gain is an additive per-band constant
in the log domain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer


@dataclass(frozen=True)
class MelParams:
    window: float = 0.046
    hop: float = 0.023
    n_bands: int = 64
    f_min: float = 50.0
    f_max: float = 8000.0
    log_floor: float = 1e-10
    mean_normalize: bool = True

    def __post_init__(self):
        if not 0 < self.hop <= self.window:
            raise ValueError("need 0 < hop <= window")
        if self.n_bands < 2:
            raise ValueError("need at least 2 mel bands")
        if not 0 <= self.f_min < self.f_max:
            raise ValueError("need 0 <= f_min < f_max")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    def window_samples(self, rate: int) -> int:
        return int(round(self.window * rate))

    def hop_samples(self, rate: int) -> int:
        return int(round(self.hop * rate))

    def validate_rate(self, rate: int) -> None:
        if self.f_max > rate / 2:
            raise ValueError(f"f_max {self.f_max} above Nyquist for rate {rate}")
        if self.window_samples(rate) < 2:
            raise ValueError("window shorter than 2 samples")


@dataclass(frozen=True)
class MelSpectrogram:
    """values: (n_frames, n_bands) log energies."""

    values: np.ndarray
    params: MelParams
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "MelSpectrogram":
        return replace(self, values=values)


def frame_count(length: int, params: MelParams, rate: int) -> int:
    """floor((L - W)/H) + 1 frames for L >= W, else 0; the tail is truncated."""
    w = params.window_samples(rate)
    h = params.hop_samples(rate)
    if length < w:
        return 0
    return (length - w) // h + 1


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def band_centers(params: MelParams) -> np.ndarray:
    """Center frequency (Hz) of each band."""
    mels = np.linspace(hz_to_mel(params.f_min), hz_to_mel(params.f_max), params.n_bands + 2)
    return mel_to_hz(mels)[1:-1]


def mel_filterbank(params: MelParams, n_fft: int, rate: int) -> np.ndarray:
    """(n_bands, n_fft//2 + 1) matrix of unit-area triangular filters."""
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / rate)
    mels = np.linspace(hz_to_mel(params.f_min), hz_to_mel(params.f_max), params.n_bands + 2)
    edges = mel_to_hz(mels)

    bank = np.zeros((params.n_bands, freqs.size))
    for b in range(params.n_bands):
        lo, center, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / (center - lo)
        falling = (hi - freqs) / (hi - center)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
        area = bank[b].sum()
        if area == 0.0:
            raise ValueError(
                f"mel band {b} covers no FFT bin; increase the window or reduce n_bands"
            )
        bank[b] /= area
    return bank


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def compute_mel_spectrogram(audio: AudioBuffer, params: MelParams = MelParams()) -> MelSpectrogram:
    """Framed Hann-window power spectra pooled by the mel filterbank.

    A buffer shorter than one window yields an empty (0-frame) spectrogram.
    """
    if audio.channels != 1:
        raise ValueError("compute_mel_spectrogram expects mono audio")
    params.validate_rate(audio.sample_rate)

    rate = audio.sample_rate
    w = params.window_samples(rate)
    h = params.hop_samples(rate)
    x = audio.channel(0)
    n = frame_count(x.size, params, rate)
    if n == 0:
        return MelSpectrogram(np.zeros((0, params.n_bands)), params, rate)

    n_fft = _next_pow2(w)
    window = np.hanning(w)
    bank = mel_filterbank(params, n_fft, rate)

    offsets = np.arange(n) * h
    frames = x[offsets[:, None] + np.arange(w)[None, :]] * window
    spectra = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    energies = spectra @ bank.T
    values = np.log(energies + params.log_floor)
    if params.mean_normalize:
        # shifted mean: exact for constant bands (all-zero input normalizes
        # to exactly 0), numerically equal to the plain mean otherwise
        base = values[0:1]
        values = values - (base + (values - base).mean(axis=0, keepdims=True))
    return MelSpectrogram(values, params, rate)


def write_mel_csv(spec: MelSpectrogram, path: str | Path) -> None:
    """Debug dump: one row per frame, one column per band."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"band_{b}" for b in range(spec.n_bands)])
        for row in spec.values:
            writer.writerow([f"{v:.9g}" for v in row])
