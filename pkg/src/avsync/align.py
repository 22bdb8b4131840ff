"""Dynamic time warping between mel spectrograms and the asynchrony score.

The warp path minimizes accumulated Euclidean frame distance under steps
(+1,+1), (+1,0), (0,+1); ties prefer the diagonal, then (+1,0). The path is
collapsed to a warp function wp(n) (one matched position per original
frame), whose RMS deviation from the identity is the asynchrony score, in
frames and, multiplied by the hop, in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .melspec import MelSpectrogram


@dataclass(frozen=True)
class WarpPath:
    pairs: list[tuple[int, int]]

    def validate(self) -> None:
        if not self.pairs:
            raise ValueError("empty warp path")
        if self.pairs[0] != (0, 0):
            raise ValueError("path must start at (0, 0)")
        for (n0, m0), (n1, m1) in zip(self.pairs, self.pairs[1:]):
            if (n1 - n0, m1 - m0) not in ((1, 1), (1, 0), (0, 1)):
                raise ValueError(f"illegal step {(n0, m0)} -> {(n1, m1)}")


@dataclass(frozen=True)
class AlignmentResult:
    path: WarpPath
    cost: float
    warp_fn: np.ndarray
    async_frames: float
    async_seconds: float


def frame_distances(a: MelSpectrogram, b: MelSpectrogram) -> np.ndarray:
    """(N, M) Euclidean distances between all frame pairs."""
    diff = a.values[:, None, :] - b.values[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def dtw_on_distances(dist: np.ndarray, band: int | None = None) -> tuple[WarpPath, float]:
    """Dynamic program over a precomputed distance matrix.

    `band` optionally restricts |n - m| (Sakoe-Chiba) for speed; the
    unconstrained default is what the correctness guarantees refer to.
    """
    n, m = dist.shape
    if n == 0 or m == 0:
        raise ValueError("cannot align an empty spectrogram")
    inf = float("inf")
    d = dist.tolist()
    acc = [[inf] * m for _ in range(n)]

    def in_band(i: int, j: int) -> bool:
        return band is None or abs(i - j) <= band

    acc[0][0] = d[0][0]
    for j in range(1, m):
        if in_band(0, j):
            acc[0][j] = d[0][j] + acc[0][j - 1]
    for i in range(1, n):
        row, prev, di = acc[i], acc[i - 1], d[i]
        if in_band(i, 0):
            row[0] = di[0] + prev[0]
        for j in range(1, m):
            if not in_band(i, j):
                continue
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if row[j - 1] < best:
                best = row[j - 1]
            row[j] = di[j] + best

    i, j = n - 1, m - 1
    pairs = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = acc[i - 1][j - 1], acc[i - 1][j], acc[i][j - 1]
            best = min(diag, up, left)
            if diag == best:
                i, j = i - 1, j - 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return WarpPath(pairs), acc[n - 1][m - 1]


def dtw(a: MelSpectrogram, b: MelSpectrogram, band: int | None = None) -> tuple[WarpPath, float]:
    if a.n_frames == 0 or b.n_frames == 0:
        raise ValueError("cannot align an empty spectrogram")
    if a.n_bands != b.n_bands:
        raise ValueError(f"band count mismatch: {a.n_bands} vs {b.n_bands}")
    if a.params.hop != b.params.hop:
        raise ValueError(f"hop mismatch: {a.params.hop} vs {b.params.hop}")
    return dtw_on_distances(frame_distances(a, b), band=band)


def warp_function(path: WarpPath, n_frames: int, collapse: str = "mean") -> np.ndarray:
    """wp(n): one matched recording position per original frame.

    A path may pair several recording frames with one original frame;
    `collapse` picks the mean (default), first, or last of them.
    """
    if collapse not in ("mean", "first", "last"):
        raise ValueError(f"unknown collapse mode {collapse!r}")
    if path.pairs[-1][0] != n_frames - 1:
        raise ValueError(f"path covers {path.pairs[-1][0] + 1} original frames, expected {n_frames}")
    sums = np.zeros(n_frames)
    counts = np.zeros(n_frames)
    firsts = np.full(n_frames, -1.0)
    lasts = np.zeros(n_frames)
    for n, m in path.pairs:
        sums[n] += m
        counts[n] += 1
        if firsts[n] < 0:
            firsts[n] = m
        lasts[n] = m
    if collapse == "mean":
        return sums / counts
    return firsts if collapse == "first" else lasts


def asynchrony_score(wp: np.ndarray, hop: float) -> tuple[float, float]:
    """RMS of wp(n) - n, in frames and in seconds (frames times hop)."""
    wp = np.asarray(wp, dtype=np.float64)
    if wp.size == 0:
        raise ValueError("empty warp function")
    resid = wp - np.arange(wp.size)
    frames = float(np.sqrt(np.mean(resid * resid)))
    return frames, frames * hop


def align_pair(a: MelSpectrogram, b: MelSpectrogram, band: int | None = None, collapse: str = "mean") -> AlignmentResult:
    path, cost = dtw(a, b, band=band)
    wp = warp_function(path, a.n_frames, collapse=collapse)
    frames, seconds = asynchrony_score(wp, a.params.hop)
    return AlignmentResult(path, cost, wp, frames, seconds)


def shift_frames(spec: MelSpectrogram, offset: int) -> MelSpectrogram:
    """Shift a spectrogram by whole hops: negative drops leading frames,
    positive prepends zero frames."""
    if offset == 0:
        return spec
    if offset < 0:
        return spec.with_values(spec.values[-offset:])
    pad = np.zeros((offset, spec.n_bands))
    return spec.with_values(np.vstack([pad, spec.values]))


def find_best_offset(
    original: MelSpectrogram,
    take: MelSpectrogram,
    search: tuple[float, float] = (-2.0, 2.0),
    step: int = 1,
) -> tuple[int, AlignmentResult]:
    """Whole-hop offset of the take minimizing the asynchrony score.

    Ties prefer the smallest |offset|, then the negative one. Offsets that
    leave no take frames are skipped; if none remain the input is degenerate.
    """
    lo_s, hi_s = search
    if not lo_s <= 0 <= hi_s:
        raise ValueError("search range must cover offset 0")
    if step < 1:
        raise ValueError("step must be at least 1 hop")
    if take.n_frames == 0:
        raise ValueError("no usable offset: take is empty")
    hop = original.params.hop
    lo = int(np.ceil(lo_s / hop))
    hi = int(np.floor(hi_s / hop))

    best: tuple[float, int, int] | None = None
    best_result: AlignmentResult | None = None
    best_offset = 0
    for offset in range(lo, hi + 1, step):
        shifted = shift_frames(take, offset)
        if shifted.n_frames < 1:
            continue
        result = align_pair(original, shifted)
        key = (result.async_frames, abs(offset), offset)
        if best is None or key < best:
            best = key
            best_result = result
            best_offset = offset
    if best_result is None:
        raise ValueError("no usable offset: take degenerate over the whole search range")
    return best_offset, best_result
