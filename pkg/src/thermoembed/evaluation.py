"""BATS-style analogy evaluation and nearest-neighbour queries.

Scores are cosines against the stored vectors. Ties are broken toward the
lower vocabulary id so reports are reproducible.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError
from .project import EmbeddingMatrix, normalize_rows

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalogySet:
    """One category: source words, each with accepted answers in file order."""

    name: str
    pairs: tuple[tuple[str, tuple[str, ...]], ...]
    path: str = ""

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CategoryResult:
    category: str
    attempted: int
    skipped: int
    correct: int

    @property
    def accuracy(self) -> float | None:
        """``None`` when nothing could be attempted."""
        return self.correct / self.attempted if self.attempted else None


@dataclass(frozen=True)
class EvaluationReport:
    results: tuple[CategoryResult, ...]

    @property
    def macro_accuracy(self) -> float | None:
        accs = [r.accuracy for r in self.results if r.accuracy is not None]
        return sum(accs) / len(accs) if accs else None

    def to_tsv(self) -> str:
        lines = ["category\tattempted\tskipped\tcorrect\taccuracy"]
        for r in self.results:
            acc = "NA" if r.accuracy is None else f"{r.accuracy:.6f}"
            lines.append(f"{r.category}\t{r.attempted}\t{r.skipped}\t{r.correct}\t{acc}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        agg = {
            "categories": len(self.results),
            "attempted": sum(r.attempted for r in self.results),
            "skipped": sum(r.skipped for r in self.results),
            "correct": sum(r.correct for r in self.results),
            "macro_accuracy": self.macro_accuracy,
        }
        return json.dumps(agg, indent=2, sort_keys=True) + "\n"


def parse_analogy_file(path: str | Path, name: str | None = None) -> AnalogySet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read analogy file ({exc.strerror})") from exc
    pairs: list[tuple[str, tuple[str, ...]]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.strip().split("\t")
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'word<TAB>answer[/answer...]'")
        src = parts[0].strip().lower()
        answers = tuple(dict.fromkeys(a.strip().lower() for a in parts[1].split("/") if a.strip()))
        if not src or not answers:
            raise DataFormatError(f"{path}:{lineno}: empty source word or answer")
        if src in seen:
            raise DataFormatError(f"{path}:{lineno}: duplicate source word {src!r}")
        seen.add(src)
        pairs.append((src, answers))
    if not pairs:
        raise DataFormatError(f"{path}: analogy category is empty")
    return AnalogySet(name or path.stem, tuple(pairs), str(path))


def load_analogy_dir(path: str | Path) -> list[AnalogySet]:
    """Read every ``*.txt`` file under ``path`` as one category, in name order."""
    path = Path(path)
    if not path.is_dir():
        raise DataFormatError(f"{path}: not a directory of analogy files")
    files = sorted(p for p in path.rglob("*.txt") if p.is_file())
    if not files:
        raise DataFormatError(f"{path}: no *.txt category files found")
    return [parse_analogy_file(f, str(f.relative_to(path).with_suffix(""))) for f in files]


def write_analogy_dir(path: str | Path, sets: Iterable[AnalogySet]) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for s in sets:
        lines = "".join(f"{src}\t{'/'.join(ans)}\n" for src, ans in s.pairs)
        (path / f"{s.name}.txt").write_text(lines, encoding="utf-8")


def _unit(e: EmbeddingMatrix) -> np.ndarray:
    u = e.__dict__.get("_unit")
    if u is None:
        u = normalize_rows(e.vectors)
        object.__setattr__(e, "_unit", u)
    return u


def _rank(scores: np.ndarray, tokens: Sequence[str], n: int) -> list[tuple[str, float]]:
    n = min(n, int(np.isfinite(scores).sum()))
    if n <= 0:
        return []
    order = np.argsort(-scores, kind="stable")[:n]
    return [(tokens[i], float(scores[i])) for i in order]


def nearest_neighbors(e: EmbeddingMatrix, w: str, n: int = 10) -> list[tuple[str, float]]:
    """Top ``n`` words by cosine to ``w``, excluding ``w``."""
    if w not in e:
        raise KeyError(f"word {w!r} is not in the vocabulary")
    if n <= 0:
        return []
    i = e.index[w]
    unit = _unit(e)
    if not unit[i].any():
        raise ValueError(f"word {w!r} has a zero vector")
    scores = unit @ unit[i]
    scores[i] = -np.inf
    return _rank(scores, e.tokens, n)


def _query_ok(e: EmbeddingMatrix, words: Iterable[str]) -> bool:
    unit = _unit(e)
    return all(w in e and unit[e.index[w]].any() for w in words)


def solve_3cosadd(
    e: EmbeddingMatrix,
    a: str,
    a_prime: str,
    b: str,
    exclude: Iterable[str] = (),
    topn: int = 1,
) -> list[tuple[str, float]] | None:
    """Rank words by cosine to ``v(a_prime) - v(a) + v(b)``.

    Returns ``None`` (a skip, not an error) when a query word is missing or
    has a zero vector. The query words and ``exclude`` never appear in the
    ranking.
    """
    if not _query_ok(e, (a, a_prime, b)):
        return None
    v = e.vectors
    target = v[e.index[a_prime]] - v[e.index[a]] + v[e.index[b]]
    norm = np.linalg.norm(target)
    scores = _unit(e) @ (target / norm if norm > 0 else target)
    for w in (a, a_prime, b, *exclude):
        if w in e:
            scores[e.index[w]] = -np.inf
    return _rank(scores, e.tokens, topn)


def _category(e: EmbeddingMatrix, s: AnalogySet) -> CategoryResult:
    v = e.vectors
    unit = _unit(e)
    first_answer = []
    for _, answers in s.pairs:
        first_answer.append(next((w for w in answers if _query_ok(e, (w,))), None))
    attempted = skipped = correct = 0
    for i, (a, _) in enumerate(s.pairs):
        a_prime = first_answer[i]
        for j, (b, b_answers) in enumerate(s.pairs):
            if i == j:
                continue
            if a_prime is None or not _query_ok(e, (a, b)) or not any(w in e for w in b_answers):
                skipped += 1
                continue
            target = v[e.index[a_prime]] - v[e.index[a]] + v[e.index[b]]
            scores = unit @ target
            for w in (a, a_prime, b):
                scores[e.index[w]] = -np.inf
            best = e.tokens[int(np.argmax(scores))]
            attempted += 1
            correct += best in b_answers
    return CategoryResult(s.name, attempted, skipped, correct)


def evaluate(e: EmbeddingMatrix, sets: Sequence[AnalogySet]) -> EvaluationReport:
    """Score every ordered pair of distinct pairs in each category with 3CosAdd.

    A question ``a : a' :: b : ?`` uses the first in-vocabulary answer of the
    ``a`` pair as ``a'`` and is correct when the top-ranked word is any
    accepted answer for ``b``. Questions touching missing words are skipped.
    """
    results = []
    for s in sets:
        r = _category(e, s)
        logger.info("%s: %d/%d correct, %d skipped", s.name, r.correct, r.attempted, r.skipped)
        results.append(r)
    return EvaluationReport(tuple(results))
