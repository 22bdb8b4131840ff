"""SMPTE linear timecode: encoding, robust decoding, and session alignment.

The encoder is the decoder's test oracle. Frames are 80 bits, biphase-mark
coded (a transition at every bit-cell boundary, an extra mid-cell transition
for a 1), with the sync word 0011 1111 1111 1101 in bits 64-79 and BCD time
fields in the low bits. Decoding classifies the intervals between
zero-crossings as half or full bit cells against a running full-cell
estimate, so it is immune to polarity inversion and to overall gain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, from_mono
from .errors import DataError

SYNC_WORD = np.array([0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1], dtype=np.uint8)

# (bit position, width) of the BCD digits, LSB first within each field
_FIELD_LAYOUT = {
    "frame_units": (0, 4),
    "frame_tens": (8, 2),
    "second_units": (16, 4),
    "second_tens": (24, 3),
    "minute_units": (32, 4),
    "minute_tens": (40, 3),
    "hour_units": (48, 4),
    "hour_tens": (56, 2),
}
_USER_NIBBLE_POSITIONS = (4, 12, 20, 28, 36, 44, 52, 60)

_ENCODE_AMPLITUDE = 0.8
_HALF_CELL_RATIO = 0.75  # intervals below this fraction of a full cell are halves


@dataclass(frozen=True)
class Timecode:
    """HH:MM:SS:FF wall-clock position at a fixed frame rate."""

    hours: int
    minutes: int
    seconds: int
    frames: int
    fps: int = 25

    def __post_init__(self):
        if self.fps < 1:
            raise ValueError("fps must be >= 1")
        if not (0 <= self.hours <= 23 and 0 <= self.minutes <= 59 and 0 <= self.seconds <= 59):
            raise ValueError(f"timecode fields out of range: {self}")
        if not 0 <= self.frames < self.fps:
            raise ValueError(f"frame field {self.frames} outside 0..{self.fps - 1}")

    def to_frame_count(self) -> int:
        """Total frames since 00:00:00:00."""
        return ((self.hours * 60 + self.minutes) * 60 + self.seconds) * self.fps + self.frames

    @classmethod
    def from_frame_count(cls, count: int, fps: int = 25) -> "Timecode":
        count %= 24 * 3600 * fps
        frames = count % fps
        secs = count // fps
        return cls(secs // 3600, (secs // 60) % 60, secs % 60, frames, fps)

    def advance(self, n_frames: int = 1) -> "Timecode":
        """Successor arithmetic with frame -> second -> minute -> hour wrap."""
        return Timecode.from_frame_count(self.to_frame_count() + n_frames, self.fps)

    @classmethod
    def parse(cls, text: str, fps: int = 25) -> "Timecode":
        parts = text.strip().split(":")
        if len(parts) != 4:
            raise ValueError(f"expected HH:MM:SS:FF, got {text!r}")
        h, m, s, f = (int(p) for p in parts)
        return cls(h, m, s, f, fps)

    def __str__(self) -> str:
        return f"{self.hours:02d}:{self.minutes:02d}:{self.seconds:02d}:{self.frames:02d}"


@dataclass(frozen=True)
class LtcFrame:
    timecode: Timecode
    start_sample: int
    user_bits: int = 0


@dataclass
class LtcDecodeResult:
    frames: list[LtcFrame]
    discarded_runs: int = 0


@dataclass
class PlaybackSchedule:
    """Sentence playback log: (sentence_id, start timecode), time-ordered."""

    entries: list[tuple[str, Timecode]] = field(default_factory=list)

    def __post_init__(self):
        ids = [sid for sid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate sentence_id in schedule")
        counts = [tc.to_frame_count() for _, tc in self.entries]
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise DataError("schedule entries not time-ordered")

    @classmethod
    def load_csv(cls, path: str | Path, fps: int = 25) -> "PlaybackSchedule":
        entries = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["sentence_id", "timecode"]:
                raise DataError(f"schedule header must be sentence_id,timecode, got {reader.fieldnames}")
            for row in reader:
                entries.append((row["sentence_id"], Timecode.parse(row["timecode"], fps)))
        return cls(entries)

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sentence_id", "timecode"])
            for sid, tc in self.entries:
                writer.writerow([sid, str(tc)])


def _frame_bits(tc: Timecode, user_bits: int) -> np.ndarray:
    bits = np.zeros(80, dtype=np.uint8)

    def put(value: int, pos: int, width: int) -> None:
        for k in range(width):
            bits[pos + k] = (value >> k) & 1

    put(tc.frames % 10, *_FIELD_LAYOUT["frame_units"])
    put(tc.frames // 10, *_FIELD_LAYOUT["frame_tens"])
    put(tc.seconds % 10, *_FIELD_LAYOUT["second_units"])
    put(tc.seconds // 10, *_FIELD_LAYOUT["second_tens"])
    put(tc.minutes % 10, *_FIELD_LAYOUT["minute_units"])
    put(tc.minutes // 10, *_FIELD_LAYOUT["minute_tens"])
    put(tc.hours % 10, *_FIELD_LAYOUT["hour_units"])
    put(tc.hours // 10, *_FIELD_LAYOUT["hour_tens"])
    for nib, pos in enumerate(_USER_NIBBLE_POSITIONS):
        put((user_bits >> (4 * nib)) & 0xF, pos, 4)
    bits[64:80] = SYNC_WORD
    return bits


def encode_ltc(start: Timecode, n_frames: int, sample_rate: int, user_bits: int = 0) -> AudioBuffer:
    """Biphase-mark LTC carrier for n_frames consecutive timecodes."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if sample_rate < 8000:
        raise ValueError("sample_rate must be >= 8000 Hz")

    fps = start.fps
    spb = sample_rate / (fps * 80)  # samples per bit cell, may be fractional
    n_bits = n_frames * 80
    total = int(round(n_frames * sample_rate / fps))

    bits = np.concatenate([_frame_bits(start.advance(i), user_bits) for i in range(n_frames)])

    # cell-start toggles (the one at sample 0 is implicit) plus mid-cell
    # toggles for every 1 bit
    starts = np.rint(np.arange(1, n_bits) * spb).astype(np.int64)
    ones = np.flatnonzero(bits)
    mids = np.rint((ones + 0.5) * spb).astype(np.int64)
    toggles = np.concatenate([starts, mids])

    delta = np.zeros(total + 1, dtype=np.int64)
    np.add.at(delta, toggles, 1)
    level = 1 - 2 * (np.cumsum(delta[:total]) % 2)
    return from_mono(_ENCODE_AMPLITUDE * level.astype(np.float64), sample_rate)


def _transition_positions(x: np.ndarray, sample_rate: int) -> np.ndarray:
    """Zero-crossing positions after removal of a sliding local mean.

    Virtual transitions at both buffer ends close the first and last bit
    cells, so a carrier that starts/ends exactly on a cell boundary loses
    no bits.
    """
    if x.size == 0:
        return np.zeros(0, dtype=np.int64)
    w = max(3, int(round(sample_rate * 0.004)) | 1)
    if x.size >= w:
        baseline = np.convolve(x, np.full(w, 1.0 / w), mode="same")
    else:
        baseline = np.mean(x)
    b = (x - baseline) >= 0
    idx = np.flatnonzero(b[1:] != b[:-1]) + 1
    return np.concatenate([[0], idx, [x.size]]).astype(np.int64)


def _classify_bits(trans: np.ndarray) -> tuple[list[tuple[np.ndarray, np.ndarray]], int, float]:
    """Walk transition intervals, emitting (bits, bit-start-samples) segments.

    A segment breaks wherever the interval pattern is inconsistent with
    biphase-mark at the running cell period (dropouts, noise). Returns the
    segments, the number of discarded transition runs, and the final
    full-cell period estimate.
    """
    d = np.diff(trans)
    if d.size == 0:
        return [], 0, 0.0
    t_ref = float(np.percentile(d, 80))
    t_full = t_ref
    t_lo, t_hi = 0.5 * t_ref, 2.0 * t_ref

    segments: list[tuple[np.ndarray, np.ndarray]] = []
    bits: list[int] = []
    starts: list[int] = []
    discarded = 0
    clean = True

    def close() -> None:
        # noise can drag the running estimate; restart each segment from
        # the global one so clean carrier after a dropout decodes again
        nonlocal bits, starts, t_full
        t_full = t_ref
        if bits:
            segments.append((np.array(bits, dtype=np.uint8), np.array(starts, dtype=np.int64)))
        bits = []
        starts = []

    i = 0
    n = d.size
    while i < n:
        di = d[i]
        if di < 0.2 * t_full or di > 1.8 * t_full:
            close()
            if clean:
                discarded += 1
                clean = False
            i += 1
            continue
        if di < _HALF_CELL_RATIO * t_full:
            if i + 1 < n and d[i + 1] < _HALF_CELL_RATIO * t_full:
                bits.append(1)
                starts.append(int(trans[i]))
                t_full = min(max(0.9 * t_full + 0.1 * (di + d[i + 1]), t_lo), t_hi)
                clean = True
                i += 2
            else:
                close()
                if clean:
                    discarded += 1
                    clean = False
                i += 1
        else:
            bits.append(0)
            starts.append(int(trans[i]))
            t_full = min(max(0.9 * t_full + 0.1 * di, t_lo), t_hi)
            clean = True
            i += 1
    close()
    return segments, discarded, t_full


def _read_field(bits: np.ndarray, pos: int, width: int) -> int:
    return int(sum(int(bits[pos + k]) << k for k in range(width)))


def decode_ltc_detailed(carrier: AudioBuffer) -> LtcDecodeResult:
    """Robust scan: every complete sync-delimited 80-bit frame with valid
    BCD fields becomes an LtcFrame; everything else is skipped and counted."""
    if carrier.channels != 1:
        raise ValueError("decode_ltc expects a mono buffer")
    trans = _transition_positions(carrier.channel(0), carrier.sample_rate)
    segments, discarded, t_full = _classify_bits(trans)

    raw: list[tuple[int, int, dict[str, int]]] = []  # (start_sample, user_bits, fields)
    for bits, starts in segments:
        if bits.size < 80:
            continue
        windows = np.lib.stride_tricks.sliding_window_view(bits, 16)
        matches = np.flatnonzero((windows == SYNC_WORD).all(axis=1))
        for m in matches:
            if m < 64:
                continue
            frame_bits = bits[m - 64 : m + 16]
            fields = {name: _read_field(frame_bits, pos, width) for name, (pos, width) in _FIELD_LAYOUT.items()}
            if any(fields[k] > 9 for k in ("frame_units", "second_units", "minute_units", "hour_units")):
                continue
            user = 0
            for nib, pos in enumerate(_USER_NIBBLE_POSITIONS):
                user |= _read_field(frame_bits, pos, 4) << (4 * nib)
            raw.append((int(starts[m - 64]), user, fields))

    if not raw:
        return LtcDecodeResult([], discarded)

    # frame rate from decoded frame spacing (or the bit period when only
    # one frame was found)
    starts_arr = np.array([r[0] for r in raw], dtype=np.float64)
    if len(raw) >= 2:
        spacing = float(np.median(np.diff(starts_arr)))
    else:
        spacing = 80.0 * t_full
    fps = max(1, int(round(carrier.sample_rate / spacing)))

    frames: list[LtcFrame] = []
    for start_sample, user, f in raw:
        hours = f["hour_tens"] * 10 + f["hour_units"]
        minutes = f["minute_tens"] * 10 + f["minute_units"]
        seconds = f["second_tens"] * 10 + f["second_units"]
        frame_no = f["frame_tens"] * 10 + f["frame_units"]
        if hours > 23 or minutes > 59 or seconds > 59 or frame_no >= fps:
            continue
        frames.append(LtcFrame(Timecode(hours, minutes, seconds, frame_no, fps), start_sample, user))

    frames.sort(key=lambda fr: fr.start_sample)
    return LtcDecodeResult(frames, discarded)


def decode_ltc(carrier: AudioBuffer) -> list[LtcFrame]:
    return decode_ltc_detailed(carrier).frames


def align_session(frames: list[LtcFrame], schedule: PlaybackSchedule) -> dict[str, float | None]:
    """Map each schedule entry to a carrier sample position.

    Linear interpolation between the two nearest decoded frames; exact when
    the entry's timecode was itself decoded. Entries outside the decoded
    range map to None instead of failing the whole session.
    """
    if not frames:
        raise ValueError("no decoded frames to align against")
    fps = frames[0].timecode.fps
    counts = np.array([fr.timecode.to_frame_count() for fr in frames], dtype=np.float64)
    starts = np.array([fr.start_sample for fr in frames], dtype=np.float64)
    order = np.argsort(counts)
    counts, starts = counts[order], starts[order]

    result: dict[str, float | None] = {}
    for sid, tc in schedule.entries:
        if tc.fps != fps:
            raise ValueError(f"schedule fps {tc.fps} != decoded fps {fps}")
        c = tc.to_frame_count()
        if c < counts[0] or c > counts[-1]:
            result[sid] = None
            continue
        result[sid] = float(np.interp(c, counts, starts))
    return result


def write_frames_csv(frames: list[LtcFrame], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timecode", "start_sample", "user_bits"])
        for fr in frames:
            writer.writerow([str(fr.timecode), fr.start_sample, fr.user_bits])


def write_alignment_csv(mapping: dict[str, float | None], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "start_sample"])
        for sid, start in mapping.items():
            writer.writerow([sid, "" if start is None else f"{start:.1f}"])
