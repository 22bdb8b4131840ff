import numpy as np
import pytest

from avsync.audio_io import AudioBuffer, delay, from_mono, gain
from avsync.melspec import (
    MelParams,
    band_centers,
    compute_mel_spectrogram,
    frame_count,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    write_mel_csv,
)

RATE = 48000


def test_frame_count_examples():
    params = MelParams()
    w = params.window_samples(RATE)
    assert w == 2208
    assert params.hop_samples(RATE) == 1104
    assert frame_count(w, params, RATE) == 1
    assert frame_count(w - 1, params, RATE) == 0
    assert frame_count(48000, params, RATE) == 42


def test_param_validation():
    with pytest.raises(ValueError):
        MelParams(hop=0.05, window=0.03)
    with pytest.raises(ValueError):
        MelParams(n_bands=1)
    with pytest.raises(ValueError):
        MelParams(f_min=500, f_max=100)
    with pytest.raises(ValueError):
        MelParams().validate_rate(12000)  # f_max above Nyquist


def test_mel_scale_round_trip():
    freqs = np.array([50.0, 440.0, 1000.0, 8000.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(freqs)), freqs, rtol=1e-12)
    assert abs(hz_to_mel(1000.0) - 999.99) < 0.2


def test_all_zero_input_normalizes_to_exact_zero():
    spec = compute_mel_spectrogram(from_mono(np.zeros(RATE), RATE))
    assert spec.n_frames == 42
    assert np.all(spec.values == 0.0)


def test_short_buffer_gives_empty_spectrogram():
    spec = compute_mel_spectrogram(from_mono(np.zeros(100), RATE))
    assert spec.n_frames == 0
    assert spec.values.shape == (0, 64)


def test_requires_mono():
    with pytest.raises(ValueError):
        compute_mel_spectrogram(AudioBuffer(np.zeros((RATE, 2)), RATE))


def test_pure_tone_peaks_in_nearest_band():
    params = MelParams(mean_normalize=False)
    t = np.arange(RATE) / RATE
    spec = compute_mel_spectrogram(from_mono(0.5 * np.sin(2 * np.pi * 1000.0 * t), RATE), params)
    centers = band_centers(params)
    expected = int(np.argmin(np.abs(centers - 1000.0)))
    assert np.all(np.argmax(spec.values, axis=1) == expected)


def test_band_energies_match_direct_dft_oracle():
    # small configuration so the naive O(N^2) DFT stays cheap
    rate = 8000
    params = MelParams(window=0.032, hop=0.016, n_bands=10, f_min=100, f_max=3500, mean_normalize=False)
    rng = np.random.default_rng(2)
    x = rng.normal(0, 0.1, 512).clip(-1, 1)
    spec = compute_mel_spectrogram(from_mono(x, rate), params)

    w = params.window_samples(rate)  # 256, already a power of two
    window = np.hanning(w)
    n = np.arange(w)
    k = np.arange(w // 2 + 1)
    dft = np.exp(-2j * np.pi * np.outer(k, n) / w)

    # independent triangle weights from the mel formula
    mels = np.linspace(2595 * np.log10(1 + params.f_min / 700), 2595 * np.log10(1 + params.f_max / 700), params.n_bands + 2)
    edges = 700 * (10 ** (mels / 2595) - 1)
    freqs = k * rate / w
    for frame_idx in range(spec.n_frames):
        frame = x[frame_idx * params.hop_samples(rate) :][:w] * window
        power = np.abs(dft @ frame) ** 2
        for b in range(params.n_bands):
            lo, c, hi = edges[b], edges[b + 1], edges[b + 2]
            weights = np.clip(np.minimum((freqs - lo) / (c - lo), (hi - freqs) / (hi - c)), 0, None)
            weights = weights / weights.sum()
            expected = np.log(float(weights @ power) + params.log_floor)
            assert abs(spec.values[frame_idx, b] - expected) < 1e-9


def test_time_shift_covariance():
    params = MelParams(mean_normalize=False)
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = from_mono(rng.normal(0, 0.1, RATE).clip(-1, 1), RATE)
        k = int(rng.integers(1, 5))
        shifted = compute_mel_spectrogram(delay(x, k * params.hop), params)
        base = compute_mel_spectrogram(x, params)
        np.testing.assert_allclose(shifted.values[k : k + base.n_frames], base.values, atol=1e-9, rtol=0)


def test_gain_invariance_after_normalization():
    rng = np.random.default_rng(6)
    for _ in range(10):
        x = from_mono(rng.normal(0, 0.2, RATE).clip(-1, 1), RATE)
        g = float(rng.uniform(0.1, 1.0))
        a = compute_mel_spectrogram(x)
        b = compute_mel_spectrogram(gain(x, g))
        assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_normalized_band_means_are_zero():
    rng = np.random.default_rng(8)
    spec = compute_mel_spectrogram(from_mono(rng.normal(0, 0.1, RATE).clip(-1, 1), RATE))
    np.testing.assert_allclose(spec.values.mean(axis=0), 0.0, atol=1e-12)


def test_unnormalized_values_bounded_by_log_floor():
    params = MelParams(mean_normalize=False)
    rng = np.random.default_rng(9)
    spec = compute_mel_spectrogram(from_mono(rng.normal(0, 0.01, RATE).clip(-1, 1), RATE), params)
    assert np.all(spec.values >= np.log(params.log_floor))


def test_filterbank_partition():
    params = MelParams()
    bank = mel_filterbank(params, 4096, RATE)
    assert bank.shape == (64, 2049)
    np.testing.assert_allclose(bank.sum(axis=1), 1.0, atol=1e-12)  # unit area
    freqs = np.fft.rfftfreq(4096, 1 / RATE)
    interior = (freqs > params.f_min) & (freqs < params.f_max)
    # every interior bin is covered by at least one filter
    coverage = bank.sum(axis=0)
    assert np.all(coverage[interior] > 0)
    # no band is all-zero (raises inside mel_filterbank otherwise)
    assert np.all(bank.max(axis=1) > 0)


def test_mel_csv_dump(tmp_path):
    spec = compute_mel_spectrogram(from_mono(np.random.default_rng(0).normal(0, 0.1, RATE), RATE))
    path = tmp_path / "mel.csv"
    write_mel_csv(spec, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == spec.n_frames + 1
    assert len(lines[0].split(",")) == spec.n_bands
