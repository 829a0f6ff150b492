"""Corpus loading, synthetic corpus generation, and bag-of-words featurization."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

LABELS = (1, 2)

# lowercase + split on non-alphanumeric runs; [^\W_] is "word char minus underscore"
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusFormatError(ValueError):
    """A corpus file could not be parsed."""


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Sample:
    """One text sample, optionally carrying a binary class label (1 or 2)."""

    text: str
    label: int | None = None

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("sample text must be a non-empty string")
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be 1 or 2, got {self.label!r}")


@dataclass
class SampleSet:
    """Ordered collection of samples; ordering is stable so seeded splits reproduce."""

    samples: list[Sample]
    provenance: str = "file"  # "file" | "generated"

    def __post_init__(self):
        if self.provenance not in ("file", "generated"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    def labels(self) -> list[int]:
        out = []
        for s in self.samples:
            if s.label is None:
                raise ValueError("sample set contains unlabeled samples")
            out.append(s.label)
        return out

    def is_labeled(self) -> bool:
        return all(s.label is not None for s in self.samples)


def load_corpus(path) -> SampleSet:
    """Read a TSV corpus: "label<TAB>text" per line, or bare "text" for pool files.

    A line containing a tab must start with a valid label; tab-free lines are
    unlabeled pool samples. Blank lines are skipped.
    """
    samples: list[Sample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" in line:
                head, text = line.split("\t", 1)
                if head not in ("1", "2"):
                    raise CorpusFormatError(
                        f"{path}: line {lineno}: label must be 1 or 2, got {head!r}"
                    )
                if not text.strip():
                    raise CorpusFormatError(f"{path}: line {lineno}: empty text")
                samples.append(Sample(text, int(head)))
            else:
                samples.append(Sample(line))
    if not samples:
        raise CorpusFormatError(f"{path}: no samples")
    return SampleSet(samples, provenance="file")


def save_corpus(sample_set: SampleSet, path) -> None:
    """Inverse of load_corpus; load(save(s)) reproduces the samples exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in sample_set:
            if s.label is None:
                fh.write(f"{s.text}\n")
            else:
                fh.write(f"{s.label}\t{s.text}\n")


def generate_corpus(n: int, vocab_size: int, overlap: float, seed: int) -> SampleSet:
    """Synthesize a labeled two-class corpus.

    Each class draws words from a Zipf-weighted vocabulary of `vocab_size` words,
    of which a fraction `overlap` is shared with the other class. Classes
    alternate sample by sample, so ~n/2 samples land in each class. Deterministic
    for a fixed seed.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must be in [0, 1]")
    if vocab_size <= 0:
        raise ValueError("vocab_size must be positive")

    rng = np.random.default_rng(seed)
    n_shared = int(round(vocab_size * overlap))
    n_excl = vocab_size - n_shared
    total_words = n_shared + 2 * n_excl
    words = [f"w{i:05d}" for i in range(total_words)]
    shared = words[:n_shared]
    class_vocab = {
        1: shared + words[n_shared : n_shared + n_excl],
        2: shared + words[n_shared + n_excl :],
    }

    # Per-class Zipf weights (exponent 1.0) over a permuted word order, so the
    # two classes rank even the shared words differently.
    weights = {}
    for c in (1, 2):
        ranks = np.empty(vocab_size)
        ranks[rng.permutation(vocab_size)] = np.arange(1, vocab_size + 1)
        w = 1.0 / ranks
        weights[c] = w / w.sum()

    samples = []
    for i in range(n):
        c = 1 + (i % 2)
        length = int(rng.integers(2, 9))  # short, tweet-fragment-like texts
        idx = rng.choice(vocab_size, size=length, replace=True, p=weights[c])
        samples.append(Sample(" ".join(class_vocab[c][j] for j in idx), c))
    return SampleSet(samples, provenance="generated")


@dataclass
class Vocabulary:
    """Top-K word list ordered by total occurrence count (ties lexicographic)."""

    words: list[tuple[str, int]]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {w: i for i, (w, _) in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("vocabulary words must be unique")
        counts = [c for _, c in self.words]
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise ValueError("vocabulary frequencies must be non-increasing")

    def __len__(self) -> int:
        return len(self.words)

    def index(self, word: str) -> int | None:
        return self._index.get(word)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for word, count in self.words:
                fh.write(f"{word}\t{count}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                word, count = line.split("\t")
                words.append((word, int(count)))
        return cls(words)


def build_vocabulary(corpus: SampleSet, k: int) -> Vocabulary:
    """Top-k words of the corpus by occurrence count, ties broken lexicographically."""
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    if k <= 0:
        raise ValueError("k must be positive")
    counts: Counter[str] = Counter()
    for s in corpus:
        counts.update(tokenize(s.text))
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(ordered[:k])


def featurize(text: str, vocab: Vocabulary) -> np.ndarray:
    """Occurrence count of each vocabulary word in the text; other words are ignored."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    counts = np.zeros(len(vocab), dtype=np.int64)
    index = vocab._index
    for tok in tokenize(text):
        i = index.get(tok)
        if i is not None:
            counts[i] += 1
    return counts


def featurize_all(texts, vocab: Vocabulary) -> np.ndarray:
    """Stacked featurize() over a sequence of texts; shape (len(texts), len(vocab))."""
    out = np.zeros((len(texts), len(vocab)), dtype=np.int64)
    index = vocab._index
    for row, text in enumerate(texts):
        for tok in tokenize(text):
            i = index.get(tok)
            if i is not None:
                out[row, i] += 1
    return out
