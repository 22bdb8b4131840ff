"""Bit-exact 16-bit PCM WAV reading/writing and elementary buffer operations.

Only the `fmt ` and `data` chunks of a RIFF/WAVE container are interpreted;
unknown chunks are skipped. Integer samples map to float via s/32768 (the
asymmetric convention), which makes the write->read round trip exact for
any value that came out of the decoder and bounds the error at one LSB
otherwise. No resampling happens anywhere in the toolkit: operations that
combine two buffers require equal sample rates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedFileError, UnsupportedFormatError

_PCM_SCALE = 32768.0
_WAVE_FORMAT_PCM = 1


@dataclass(frozen=True)
class AudioBuffer:
    """Sampled waveform. `samples` has shape (n_frames, n_channels), float64."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise ValueError("samples must be 2-D (frames, channels)")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def n_frames(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate

    def channel(self, index: int) -> np.ndarray:
        """1-D view of one channel's samples."""
        return self.samples[:, index]


def from_mono(samples: np.ndarray, sample_rate: int) -> AudioBuffer:
    """Wrap a 1-D sample array as a mono buffer."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("from_mono expects a 1-D array")
    return AudioBuffer(samples.reshape(-1, 1), sample_rate)


def read_wav(data: bytes) -> AudioBuffer:
    """Decode a 16-bit PCM RIFF/WAVE file from raw bytes.

    Raises UnsupportedFormatError for non-PCM or non-16-bit content and
    MalformedFileError for broken containers (truncated data, zero rate,
    missing chunks).
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedFileError("not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(data):
                raise MalformedFileError("fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            if body_start + chunk_size > len(data):
                raise MalformedFileError("data chunk truncated")
            payload = data[body_start : body_start + chunk_size]
        # skip unknown chunks; chunks are word-aligned
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise MalformedFileError("missing fmt chunk")
    if payload is None:
        raise MalformedFileError("missing data chunk")

    audio_format, n_channels, sample_rate, _, block_align, bits = fmt
    if audio_format != _WAVE_FORMAT_PCM:
        raise UnsupportedFormatError(f"unsupported codec (format tag {audio_format})")
    if bits != 16:
        raise UnsupportedFormatError(f"only 16-bit PCM is supported, got {bits}-bit")
    if sample_rate == 0:
        raise MalformedFileError("zero sample rate")
    if n_channels < 1:
        raise MalformedFileError("zero channels")
    if block_align not in (0, 2 * n_channels):
        raise MalformedFileError(f"inconsistent block alignment {block_align}")

    frame_bytes = 2 * n_channels
    n_frames = len(payload) // frame_bytes
    raw = np.frombuffer(payload[: n_frames * frame_bytes], dtype="<i2")
    samples = raw.astype(np.float64).reshape(n_frames, n_channels) / _PCM_SCALE
    return AudioBuffer(samples, int(sample_rate))


def write_wav(buffer: AudioBuffer, bit_depth: int = 16) -> bytes:
    """Encode a buffer as 16-bit PCM WAV bytes.

    Samples outside [-1, 1] raise ValueError rather than being clipped
    silently; +1.0 quantizes to 32767 (one LSB below the exact value).
    """
    if bit_depth != 16:
        raise UnsupportedFormatError(f"only 16-bit output is supported, got {bit_depth}")
    samples = buffer.samples
    if samples.size and (np.max(samples) > 1.0 or np.min(samples) < -1.0):
        raise ValueError("samples outside [-1, 1]; scale before writing")

    ints = np.clip(np.rint(samples * _PCM_SCALE), -32768, 32767).astype("<i2")
    payload = ints.tobytes()

    n_channels = buffer.channels
    byte_rate = buffer.sample_rate * n_channels * 2
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack("<IHHIIHH", 16, _WAVE_FORMAT_PCM, n_channels, buffer.sample_rate, byte_rate, n_channels * 2, 16),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    return header + payload


def load_wav(path: str | Path) -> AudioBuffer:
    return read_wav(Path(path).read_bytes())


def save_wav(path: str | Path, buffer: AudioBuffer) -> None:
    Path(path).write_bytes(write_wav(buffer))


def extract_channel(buffer: AudioBuffer, index: int) -> AudioBuffer:
    """Mono buffer holding one channel; sample values are untouched."""
    if not 0 <= index < buffer.channels:
        raise ValueError(f"channel {index} out of range (have {buffer.channels})")
    return AudioBuffer(buffer.samples[:, index : index + 1].copy(), buffer.sample_rate)


def delay(buffer: AudioBuffer, seconds: float) -> AudioBuffer:
    """Prepend round(seconds * rate) zero frames to every channel.

    Negative durations are rejected; use crop() to advance a signal.
    """
    if seconds < 0:
        raise ValueError("delay must be nonnegative; use crop for advances")
    pad = int(round(seconds * buffer.sample_rate))
    if pad == 0:
        return buffer
    zeros = np.zeros((pad, buffer.channels))
    return AudioBuffer(np.vstack([zeros, buffer.samples]), buffer.sample_rate)


def crop(buffer: AudioBuffer, start_frame: int, stop_frame: int | None = None) -> AudioBuffer:
    """Keep frames [start_frame, stop_frame)."""
    if start_frame < 0:
        raise ValueError("start_frame must be nonnegative")
    return AudioBuffer(buffer.samples[start_frame:stop_frame].copy(), buffer.sample_rate)


def gain(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Scale all samples. The result may leave [-1, 1]; write_wav checks."""
    return AudioBuffer(buffer.samples * factor, buffer.sample_rate)
