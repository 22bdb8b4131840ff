"""Batch scoring of a dubbed-take corpus: asynchrony matrix, best-take
selection, outlier correction, and sensitivity distributions.

A corpus manifest lists original sentences and their candidate dubbed
takes. Every (original, take) pair gets an asynchrony score; the take with
the smallest score wins its sentence. Best takes whose score still exceeds
the outlier threshold (default 60 ms, roughly where dubbing artifacts
start to be noticeable) get an automatic whole-hop offset correction.
Mismatched scores (every take against every *other* sentence's original)
are computed on demand only, since they cost O(I^2 J) alignments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .align import align_pair, find_best_offset
from .audio_io import load_wav
from .errors import DataError
from .melspec import MelParams, MelSpectrogram, compute_mel_spectrogram

DEFAULT_OUTLIER_THRESHOLD = 0.060  # seconds


@dataclass(frozen=True)
class TakeCorpus:
    originals: dict[str, Path]
    takes: dict[tuple[str, str], Path]

    def __post_init__(self):
        missing = {sid for sid, _ in self.takes if sid not in self.originals}
        if missing:
            raise DataError(f"takes reference unknown sentence ids: {sorted(missing)}")

    @property
    def sentence_ids(self) -> list[str]:
        return sorted(self.originals)

    def take_ids(self, sentence_id: str) -> list[str]:
        return sorted(tid for sid, tid in self.takes if sid == sentence_id)


def load_manifest(path: str | Path) -> TakeCorpus:
    """CSV manifest: kind,sentence_id,take_id,path with kind original|take.
    Relative paths resolve against the manifest's directory."""
    path = Path(path)
    originals: dict[str, Path] = {}
    takes: dict[tuple[str, str], Path] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["kind", "sentence_id", "take_id", "path"]
        if reader.fieldnames != expected:
            raise DataError(f"manifest header must be {','.join(expected)}")
        for row in reader:
            file_path = Path(row["path"])
            if not file_path.is_absolute():
                file_path = path.parent / file_path
            kind, sid, tid = row["kind"], row["sentence_id"], row["take_id"]
            if kind == "original":
                if sid in originals:
                    raise DataError(f"duplicate original for sentence {sid}")
                originals[sid] = file_path
            elif kind == "take":
                if not tid:
                    raise DataError(f"take for sentence {sid} is missing a take_id")
                if (sid, tid) in takes:
                    raise DataError(f"duplicate take ({sid}, {tid})")
                takes[(sid, tid)] = file_path
            else:
                raise DataError(f"unknown manifest kind {kind!r}")
    return TakeCorpus(originals, takes)


def write_manifest(corpus: TakeCorpus, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "sentence_id", "take_id", "path"])
        for sid in corpus.sentence_ids:
            writer.writerow(["original", sid, "", str(corpus.originals[sid])])
        for (sid, tid) in sorted(corpus.takes):
            writer.writerow(["take", sid, tid, str(corpus.takes[(sid, tid)])])


@dataclass(frozen=True)
class ScanEntry:
    original_id: str
    take_sentence_id: str
    take_id: str
    async_seconds: float
    async_frames: float

    @property
    def matched(self) -> bool:
        return self.original_id == self.take_sentence_id


@dataclass
class ScanResult:
    entries: list[ScanEntry]
    errors: list[dict] = field(default_factory=list)
    mismatched_mode: str = "off"

    def matched_scores(self) -> dict[str, dict[str, float]]:
        scores: dict[str, dict[str, float]] = {}
        for e in self.entries:
            if e.matched:
                scores.setdefault(e.original_id, {})[e.take_id] = e.async_seconds
        return scores

    def mismatched_values(self) -> list[float]:
        return [e.async_seconds for e in self.entries if not e.matched]


class _MelCache:
    def __init__(self, params: MelParams):
        self.params = params
        self._cache: dict[Path, MelSpectrogram] = {}
        self.rate: int | None = None

    def get(self, path: Path) -> MelSpectrogram:
        if path not in self._cache:
            audio = load_wav(path)
            if audio.channels != 1:
                raise DataError(f"{path}: corpus audio must be mono")
            if self.rate is None:
                self.rate = audio.sample_rate
            elif audio.sample_rate != self.rate:
                raise DataError(f"{path}: sample rate {audio.sample_rate} != corpus rate {self.rate}")
            spec = compute_mel_spectrogram(audio, self.params)
            if spec.n_frames == 0:
                raise DataError(f"{path}: shorter than one analysis window")
            self._cache[path] = spec
        return self._cache[path]


def scan_corpus(
    corpus: TakeCorpus,
    params: MelParams = MelParams(),
    mismatched: str = "off",
    sample_fraction: float = 1.0,
    seed: int = 0,
) -> ScanResult:
    """Asynchrony score for every (original, take) pair.

    mismatched: "off" scores matched pairs only, "exact" adds every take
    against every other original, "sample" adds a Bernoulli(sample_fraction)
    subset of those. File problems become per-entry error records; the scan
    continues.
    """
    if mismatched not in ("off", "exact", "sample"):
        raise ValueError(f"mismatched must be off/exact/sample, got {mismatched!r}")
    cache = _MelCache(params)
    result = ScanResult([], mismatched_mode=mismatched)
    rng = np.random.default_rng(seed)

    def score(orig_id: str, take_key: tuple[str, str]) -> None:
        try:
            orig_mel = cache.get(corpus.originals[orig_id])
            take_mel = cache.get(corpus.takes[take_key])
            aligned = align_pair(orig_mel, take_mel)
        except (OSError, DataError, ValueError) as exc:
            result.errors.append(
                {"original_id": orig_id, "sentence_id": take_key[0], "take_id": take_key[1], "error": str(exc)}
            )
            return
        result.entries.append(
            ScanEntry(orig_id, take_key[0], take_key[1], aligned.async_seconds, aligned.async_frames)
        )

    take_keys = sorted(corpus.takes)
    for sid, tid in take_keys:
        score(sid, (sid, tid))
    if mismatched != "off":
        for orig_id in corpus.sentence_ids:
            for sid, tid in take_keys:
                if sid == orig_id:
                    continue
                if mismatched == "sample" and rng.random() >= sample_fraction:
                    continue
                score(orig_id, (sid, tid))
    return result


def select_best(scan: ScanResult) -> tuple[dict[str, tuple[str, float]], list[str]]:
    """Per-sentence argmin over takes; ties go to the smallest take_id.
    Sentences with no valid scored take land in the unselectable list."""
    matched = scan.matched_scores()
    best: dict[str, tuple[str, float]] = {}
    for sid, takes in matched.items():
        take_id = min(takes, key=lambda t: (takes[t], t))
        best[sid] = (take_id, takes[take_id])
    failed = sorted({e["sentence_id"] for e in scan.errors if e["original_id"] == e["sentence_id"]} - set(best))
    return best, failed


@dataclass(frozen=True)
class SelectionRecord:
    sentence_id: str
    take_id: str
    raw_seconds: float
    corrected_seconds: float
    offset_seconds: float
    outlier: bool


def flag_outliers(
    corpus: TakeCorpus,
    best: dict[str, tuple[str, float]],
    params: MelParams = MelParams(),
    threshold: float = DEFAULT_OUTLIER_THRESHOLD,
    search: tuple[float, float] = (-2.0, 2.0),
) -> list[SelectionRecord]:
    """Offset-correct every best take scoring above the threshold.

    The zero offset is always in the search set, so the corrected score
    never exceeds the raw one; the flag stays set only if the corrected
    score is still above the threshold.
    """
    cache = _MelCache(params)
    records = []
    for sid in sorted(best):
        take_id, raw = best[sid]
        if raw > threshold:
            orig_mel = cache.get(corpus.originals[sid])
            take_mel = cache.get(corpus.takes[(sid, take_id)])
            offset, corrected = find_best_offset(orig_mel, take_mel, search=search)
            records.append(
                SelectionRecord(
                    sentence_id=sid,
                    take_id=take_id,
                    raw_seconds=raw,
                    corrected_seconds=corrected.async_seconds,
                    offset_seconds=offset * params.hop,
                    outlier=corrected.async_seconds > threshold,
                )
            )
        else:
            records.append(SelectionRecord(sid, take_id, raw, raw, 0.0, False))
    return records


@dataclass(frozen=True)
class Distribution:
    values: list[float]

    def summary(self) -> dict:
        arr = np.asarray(self.values)
        return {
            "n": int(arr.size),
            "min": float(arr.min()),
            "median": float(np.median(arr)),
            "max": float(arr.max()),
        }


@dataclass(frozen=True)
class SensitivityReport:
    matched_best: Distribution
    matched_all: Distribution
    mismatched: Distribution

    def to_dict(self, include_values: bool = True) -> dict:
        out = {}
        for name in ("matched_best", "matched_all", "mismatched"):
            dist: Distribution = getattr(self, name)
            out[name] = dist.summary()
            if include_values:
                out[name]["values"] = dist.values
        return out


def sensitivity_report(scan: ScanResult) -> SensitivityReport:
    """Matched-best / matched-all / mismatched score distributions."""
    matched = scan.matched_scores()
    if len(matched) < 2:
        raise DataError("sensitivity analysis needs at least 2 sentences")
    mismatched = scan.mismatched_values()
    if not mismatched:
        raise DataError("scan has no mismatched scores; rerun with mismatched=exact or sample")
    best, _ = select_best(scan)
    return SensitivityReport(
        matched_best=Distribution([score for _, (_tid, score) in sorted(best.items())]),
        matched_all=Distribution([e.async_seconds for e in scan.entries if e.matched]),
        mismatched=Distribution(sorted(mismatched)),
    )


def build_selection_report(
    corpus: TakeCorpus,
    params: MelParams = MelParams(),
    threshold: float = DEFAULT_OUTLIER_THRESHOLD,
    search: tuple[float, float] = (-2.0, 2.0),
    mismatched: str = "off",
    sample_fraction: float = 1.0,
    seed: int = 0,
) -> dict:
    """Full pipeline: scan, select, correct outliers, summarize. Returns a
    JSON-ready dict."""
    scan = scan_corpus(corpus, params, mismatched=mismatched, sample_fraction=sample_fraction, seed=seed)
    best, unselectable = select_best(scan)
    records = flag_outliers(corpus, best, params, threshold=threshold, search=search)

    corrected = [r.corrected_seconds for r in records]
    report = {
        "params": {
            "window": params.window,
            "hop": params.hop,
            "n_bands": params.n_bands,
            "f_min": params.f_min,
            "f_max": params.f_max,
            "threshold_seconds": threshold,
            "mismatched": mismatched,
        },
        "sentences": [
            {
                "sentence_id": r.sentence_id,
                "best_take_id": r.take_id,
                "raw_seconds": r.raw_seconds,
                "corrected_seconds": r.corrected_seconds,
                "offset_seconds": r.offset_seconds,
                "outlier": r.outlier,
            }
            for r in records
        ],
        "unselectable": unselectable,
        "summary": {
            "n_sentences": len(records),
            "n_scores": len(scan.entries),
            "n_corrected": sum(1 for r in records if r.offset_seconds != 0.0 or r.raw_seconds != r.corrected_seconds),
            "n_outliers": sum(1 for r in records if r.outlier),
            "score_quantiles": {
                q: float(np.quantile(corrected, float(q))) for q in ("0.0", "0.25", "0.5", "0.75", "1.0")
            }
            if corrected
            else {},
        },
        "errors": scan.errors,
    }
    if mismatched != "off":
        report["sensitivity"] = sensitivity_report(scan).to_dict(include_values=False)
    return report


def write_report_json(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_selection_csv(report: dict, path: str | Path) -> None:
    """Flat per-sentence export of a selection report."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "best_take_id", "raw_seconds", "corrected_seconds", "offset_seconds", "outlier"])
        for row in report["sentences"]:
            writer.writerow(
                [
                    row["sentence_id"],
                    row["best_take_id"],
                    f"{row['raw_seconds']:.6f}",
                    f"{row['corrected_seconds']:.6f}",
                    f"{row['offset_seconds']:.6f}",
                    int(row["outlier"]),
                ]
            )
