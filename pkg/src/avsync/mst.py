"""Matrix sentence test structure: word matrix, sentences, balanced lists,
and word scoring.

Sentences draw one word per category in the fixed
name-verb-numeral-adjective-object order. Generated 20-sentence lists are
balanced so that every word of every category appears exactly twice;
externally authored list files are accepted for material fidelity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError

CATEGORIES = ("name", "verb", "numeral", "adjective", "object")
WORDS_PER_CATEGORY = 10
SENTENCES_PER_LIST = 20

NO_ANSWER = None


@dataclass(frozen=True)
class WordMatrix:
    words: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if set(self.words) != set(CATEGORIES):
            raise DataError(f"word matrix must have exactly the categories {CATEGORIES}")
        for cat in CATEGORIES:
            if len(self.words[cat]) != WORDS_PER_CATEGORY:
                raise DataError(f"category {cat!r} must have {WORDS_PER_CATEGORY} words")
        all_words = [w for cat in CATEGORIES for w in self.words[cat]]
        if len(set(all_words)) != len(all_words):
            raise DataError("word matrix entries must be distinct")

    def word(self, category: str, index: int) -> str:
        return self.words[category][index]

    def index(self, category: str, word: str) -> int:
        try:
            return self.words[category].index(word)
        except ValueError:
            raise DataError(f"{word!r} is not a {category} of this matrix") from None


@dataclass(frozen=True)
class MatrixSentence:
    sentence_id: str
    indices: tuple[int, int, int, int, int]

    def __post_init__(self):
        if len(self.indices) != len(CATEGORIES):
            raise ValueError("a sentence has one index per category")
        if any(not 0 <= i < WORDS_PER_CATEGORY for i in self.indices):
            raise ValueError(f"word indices out of range: {self.indices}")

    def text(self, matrix: WordMatrix) -> str:
        return " ".join(matrix.word(cat, i) for cat, i in zip(CATEGORIES, self.indices))


@dataclass(frozen=True)
class TestList:
    list_id: str
    sentences: tuple[MatrixSentence, ...]

    def __post_init__(self):
        if len(self.sentences) != SENTENCES_PER_LIST:
            raise DataError(f"a list holds {SENTENCES_PER_LIST} sentences, got {len(self.sentences)}")


# A response is one entry per category: a word index, or NO_ANSWER
Response = tuple[int | None, int | None, int | None, int | None, int | None]


def generate_lists(matrix: WordMatrix, n_lists: int, seed: int) -> list[TestList]:
    """Deterministic balanced lists: each word of each category twice per list.

    Two concatenated permutations per category guarantee the balance; the
    rare draw with a repeated sentence is rejected and redrawn.
    """
    if n_lists < 1:
        raise ValueError("n_lists must be >= 1")
    rng = np.random.default_rng(seed)
    lists = []
    for li in range(n_lists):
        while True:
            columns = [
                np.concatenate([rng.permutation(WORDS_PER_CATEGORY), rng.permutation(WORDS_PER_CATEGORY)])
                for _ in CATEGORIES
            ]
            rows = list(zip(*(col.tolist() for col in columns)))
            if len(set(rows)) == SENTENCES_PER_LIST:
                break
        list_id = f"L{li + 1:02d}"
        sentences = tuple(
            MatrixSentence(f"{list_id}-S{pos + 1:02d}", tuple(rows[pos])) for pos in range(SENTENCES_PER_LIST)
        )
        lists.append(TestList(list_id, sentences))
    return lists


def category_histogram(test_list: TestList) -> dict[str, list[int]]:
    """Occurrences of each word index per category across the list."""
    hist = {cat: [0] * WORDS_PER_CATEGORY for cat in CATEGORIES}
    for sentence in test_list.sentences:
        for cat, idx in zip(CATEGORIES, sentence.indices):
            hist[cat][idx] += 1
    return hist


def score_response(target: MatrixSentence, response: Response) -> int:
    """Words correct, 0-5; a no-answer never matches."""
    if len(response) != len(CATEGORIES):
        raise ValueError("a response has one slot per category")
    return sum(1 for t, r in zip(target.indices, response) if r is not None and r == t)


def word_percentage(scores) -> float:
    """Percent words correct over a sequence of per-sentence scores."""
    scores = list(scores)
    if not scores:
        raise ValueError("no scores")
    return 100.0 * sum(scores) / (len(CATEGORIES) * len(scores))


def default_word_matrix() -> WordMatrix:
    """The German female-speaker matrix shipped with the package."""
    text = resources.files("avsync.data").joinpath("olsa_words.json").read_text(encoding="utf-8")
    return WordMatrix({cat: tuple(words) for cat, words in json.loads(text).items()})


def load_word_matrix(path: str | Path) -> WordMatrix:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DataError("word matrix file must be a JSON object of category arrays")
    return WordMatrix({cat: tuple(words) for cat, words in data.items()})


def save_word_matrix(matrix: WordMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({cat: list(matrix.words[cat]) for cat in CATEGORIES}, fh, ensure_ascii=False, indent=2)


def save_lists(lists: list[TestList], matrix: WordMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["list_id", "position"] + list(CATEGORIES))
        for tl in lists:
            for pos, sentence in enumerate(tl.sentences, start=1):
                words = [matrix.word(cat, i) for cat, i in zip(CATEGORIES, sentence.indices)]
                writer.writerow([tl.list_id, pos] + words)


def load_lists(path: str | Path, matrix: WordMatrix) -> list[TestList]:
    grouped: dict[str, list[tuple[int, MatrixSentence]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["list_id", "position"] + list(CATEGORIES)
        if reader.fieldnames != expected:
            raise DataError(f"list file header must be {','.join(expected)}")
        for row in reader:
            list_id = row["list_id"]
            pos = int(row["position"])
            indices = tuple(matrix.index(cat, row[cat]) for cat in CATEGORIES)
            sentence = MatrixSentence(f"{list_id}-S{pos:02d}", indices)
            grouped.setdefault(list_id, []).append((pos, sentence))
    lists = []
    for list_id, entries in grouped.items():
        entries.sort()
        lists.append(TestList(list_id, tuple(s for _, s in entries)))
    return lists
