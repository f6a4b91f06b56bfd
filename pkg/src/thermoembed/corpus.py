"""Tokenization, vocabulary construction and segment streaming.

One input line is one segment. Segments are the unit an energy attaches to
downstream, so they are kept intact here rather than concatenated.
"""

from __future__ import annotations

import hashlib
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DataFormatError, InvalidInputError

logger = logging.getLogger(__name__)

NUM_TOKEN = "<num>"

_NUMERIC = re.compile(r"^\d+(?:[.,]\d+)*$")


def _strip_edges(tok: str) -> str:
    i, j = 0, len(tok)
    while i < j and not tok[i].isalnum():
        i += 1
    while j > i and not tok[j - 1].isalnum():
        j -= 1
    return tok[i:j]


def tokenize(line: str) -> list[str]:
    """Split a line into lowercased tokens.

    Leading and trailing non-alphanumeric characters are stripped from each
    whitespace-separated chunk, purely numeric tokens become ``<num>``, and
    chunks that strip to nothing are dropped.

    >>> tokenize("It stinks.")
    ['it', 'stinks']
    >>> tokenize("On January 15, 2008")
    ['on', 'january', '<num>', '<num>']
    """
    out = []
    for chunk in line.lower().split():
        tok = _strip_edges(chunk)
        if not tok:
            continue
        out.append(NUM_TOKEN if _NUMERIC.match(tok) else tok)
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Token inventory with dense ids assigned by descending frequency."""

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) != len(self.counts):
            raise InvalidInputError("tokens and counts differ in length")
        index = {t: i for i, t in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise InvalidInputError("duplicate token in vocabulary")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        return self.index[token]

    def token(self, i: int) -> str:
        return self.tokens[i]

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to ids, dropping out-of-vocabulary tokens."""
        idx = self.index
        return np.fromiter((idx[t] for t in tokens if t in idx), dtype=np.int64)

    def to_tsv(self) -> str:
        return "".join(f"{t}\t{i}\t{c}\n" for i, (t, c) in enumerate(zip(self.tokens, self.counts)))

    def digest(self) -> str:
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, min_count: int = 1) -> "Vocabulary":
        path = Path(path)
        tokens, counts = [], []
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataFormatError(f"{path}: cannot read vocabulary TSV ({exc.strerror})") from exc
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split("\t")
            if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
                raise DataFormatError(f"{path}:{lineno}: expected 'token<TAB>id<TAB>count'")
            if int(parts[1]) != len(tokens):
                raise DataFormatError(f"{path}:{lineno}: ids must be contiguous and sorted, got {parts[1]}")
            tokens.append(parts[0])
            counts.append(int(parts[2]))
        return cls(tuple(tokens), tuple(counts), min_count)


def build_vocabulary(lines: Iterable[str], min_count: int = 1) -> Vocabulary:
    """Count tokens in one pass and keep those seen at least ``min_count`` times.

    Ids go to the most frequent token first; equal counts are ordered
    lexicographically so the result depends only on the input text.
    """
    if min_count < 1:
        raise InvalidInputError(f"min_count must be >= 1, got {min_count}")
    freq: Counter[str] = Counter()
    for line in lines:
        freq.update(tokenize(line))
    kept = sorted(((t, c) for t, c in freq.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    logger.info("vocabulary: %d of %d types kept at min_count=%d", len(kept), len(freq), min_count)
    return Vocabulary(tuple(t for t, _ in kept), tuple(c for _, c in kept), min_count)


@dataclass(frozen=True)
class Segment:
    """Token ids of one line, with where it came from."""

    ids: np.ndarray
    doc: int = 0
    index: int = 0

    def __len__(self) -> int:
        return len(self.ids)


def segments(lines: Iterable[str], vocab: Vocabulary, doc: int = 0) -> Iterator[Segment]:
    """Yield one :class:`Segment` per input line, OOV tokens removed."""
    for i, line in enumerate(lines):
        yield Segment(vocab.encode(tokenize(line)), doc, i)


def read_lines(path: str | Path) -> Iterator[str]:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            yield from fh
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read corpus ({exc.strerror})") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: corpus is not valid UTF-8 text") from exc


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    try:
        with Path(path).open("rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                h.update(block)
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    return h.hexdigest()
