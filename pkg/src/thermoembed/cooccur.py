"""Windowed cooccurrence counting with optional per-segment Boltzmann weights.

Each segment (line) is treated as a microstate. Its weight is
``exp(beta * (sum_k mu_k N_k - E))``; with every potential at zero and every
energy at one this is the same constant for all segments, and the matrix is
plain cooccurrence counts times ``exp(-beta)``.

When every segment in a block shares one weight, that weight is kept aside
as :attr:`CooccurrenceMatrix.scale` and the stored values stay integer
counts. Merging blocks with equal scales is then exact, which is what makes
sharded counting bit-identical to a single pass.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from . import formats
from .corpus import Segment, Vocabulary
from .errors import InvalidInputError, MetadataMismatchError

logger = logging.getLogger(__name__)

UNIFORM = "uniform"
HARMONIC = "harmonic"


@dataclass(frozen=True)
class WindowConfig:
    window: int = 2
    weighting: str = UNIFORM
    symmetric: bool = True

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise InvalidInputError(f"window must be a positive integer, got {self.window!r}")
        if self.weighting not in (UNIFORM, HARMONIC):
            raise InvalidInputError(f"window weighting must be 'uniform' or 'harmonic', got {self.weighting!r}")

    def distance_weight(self, d: int) -> float:
        return 1.0 if self.weighting == UNIFORM else 1.0 / d

    def to_meta(self) -> dict:
        return {"window": self.window, "weighting": self.weighting, "symmetric": self.symmetric}


@dataclass(frozen=True)
class SegmentWeighting:
    """Inverse temperature, per-token potentials and the segment energy rule.

    ``energy`` is either a constant or a callable ``Segment -> float``; the
    callable form is the hook for context-dependent energies.
    """

    beta: float = 1.0
    potentials: Mapping[int, float] = field(default_factory=dict)
    energy: float | Callable[[Segment], float] = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise InvalidInputError(f"beta must be positive, got {self.beta!r}")
        if not all(math.isfinite(v) for v in self.potentials.values()):
            raise InvalidInputError("potentials must be finite")

    @property
    def is_constant(self) -> bool:
        """True when every segment receives the same weight."""
        return not callable(self.energy) and not any(self.potentials.values())

    def potential_array(self, size: int) -> np.ndarray:
        mu = np.zeros(size)
        for k, v in self.potentials.items():
            if 0 <= k < size:
                mu[k] = v
        return mu

    def energy_of(self, seg: Segment) -> float:
        return float(self.energy(seg)) if callable(self.energy) else float(self.energy)

    def to_meta(self) -> dict:
        if callable(self.energy):
            energy = f"callable:{getattr(self.energy, '__qualname__', 'custom')}"
        else:
            energy = float(self.energy)
        items = sorted((int(k), float(v)) for k, v in self.potentials.items() if v)
        pot_digest = hashlib.sha256(json.dumps(items).encode()).hexdigest() if items else None
        return {"beta": float(self.beta), "energy": energy, "potentials": pot_digest}


def segment_weight(seg: Segment, sw: SegmentWeighting, mu: np.ndarray | None = None) -> float:
    """Boltzmann factor ``exp(beta * (sum_k mu_k N_k(seg) - E(seg)))``."""
    ids = np.asarray(seg.ids)
    if mu is None:
        potential = sum(sw.potentials.get(int(i), 0.0) for i in ids)
    else:
        potential = float(mu[ids].sum()) if len(ids) else 0.0
    return math.exp(sw.beta * (potential - sw.energy_of(seg)))


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Sparse target x context weights.

    The weight of an entry is ``scale * matrix[t, c]``. ``meta`` records the
    configuration needed to decide whether two matrices may be merged.
    """

    matrix: sp.csr_matrix
    scale: float
    meta: dict

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def weights(self) -> sp.csr_matrix:
        return (self.matrix * self.scale).tocsr()

    @property
    def total_mass(self) -> float:
        return float(self.matrix.sum()) * self.scale

    def to_dict(self) -> dict:
        coo = self.matrix.tocoo()
        return {(int(r), int(c)): float(v) * self.scale for r, c, v in zip(coo.row, coo.col, coo.data)}

    def save(self, path: str | Path) -> None:
        formats.write_matrix(path, self.matrix)
        formats.write_meta(path, {**self.meta, "scale": self.scale})

    @classmethod
    def load(cls, path: str | Path) -> "CooccurrenceMatrix":
        meta = formats.read_meta(path)
        if meta.get("kind") != "cooccurrence":
            raise MetadataMismatchError(f"{path}: expected a cooccurrence matrix, sidecar says {meta.get('kind')!r}")
        scale = float(meta.pop("scale", 1.0))
        m = formats.read_matrix(path, tuple(meta["shape"]))
        return cls(m, scale, meta)


def _finish(m: sp.spmatrix) -> sp.csr_matrix:
    m = sp.csr_matrix(m, dtype=np.float64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def _count_block(
    id_arrays: list[np.ndarray],
    seg_weights: np.ndarray | None,
    shape: tuple[int, int],
    wc: WindowConfig,
) -> sp.csr_matrix:
    """Accumulate one block of segments. ``seg_weights=None`` means unit weights."""
    lens = np.fromiter((len(a) for a in id_arrays), dtype=np.int64, count=len(id_arrays))
    if lens.sum() == 0:
        return sp.csr_matrix(shape, dtype=np.float64)
    flat = np.concatenate(id_arrays).astype(np.int64)
    seg = np.repeat(np.arange(len(id_arrays)), lens)
    n_ctx = shape[1]
    rows, cols, vals = [], [], []
    for d in range(1, wc.window + 1):
        if d >= len(flat):
            break
        same = seg[d:] == seg[:-d]
        left, right = flat[:-d][same], flat[d:][same]
        dw = wc.distance_weight(d)
        w = np.full(len(left), dw) if seg_weights is None else seg_weights[seg[:-d][same]] * dw
        pairs = [(left, right)]
        if wc.symmetric:
            pairs.append((right, left))
        for t, c in pairs:
            keep = c < n_ctx
            rows.append(t[keep])
            cols.append(c[keep])
            vals.append(w[keep])
    if not vals:
        return sp.csr_matrix(shape, dtype=np.float64)
    data = np.concatenate(vals)
    m = sp.coo_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=shape)
    return _finish(m)


def _count_task(args):
    return _count_block(*args)


def _blocks(
    segs: Iterable[Segment],
    sw: SegmentWeighting,
    mu: np.ndarray,
    block_tokens: int,
) -> Iterator[tuple[list[np.ndarray], np.ndarray | None, float]]:
    """Group segments into blocks; yields (ids, per-segment weights or None, scale)."""
    ids: list[np.ndarray] = []
    weights: list[float] = []
    n = 0

    def flush():
        w = np.array(weights)
        if len(w) == 0 or np.all(w == w[0]):
            return list(ids), None, float(w[0]) if len(w) else 1.0
        return list(ids), w, 1.0

    for s in segs:
        a = np.asarray(s.ids, dtype=np.int64)
        a = a[a >= 0]
        ids.append(a)
        weights.append(segment_weight(Segment(a, s.doc, s.index), sw, mu))
        n += len(a)
        if n >= block_tokens:
            yield flush()
            ids, weights, n = [], [], 0
    if ids:
        yield flush()


def _base_meta(vocab: Vocabulary, wc: WindowConfig, sw: SegmentWeighting, n_ctx: int, corpus_digest: str) -> dict:
    return {
        "kind": "cooccurrence",
        "shape": [len(vocab), n_ctx],
        "window": wc.to_meta(),
        "weighting": sw.to_meta(),
        "corpus_digest": corpus_digest,
        "vocab_digest": vocab.digest(),
    }


def _add(acc: tuple[sp.csr_matrix, float] | None, block: sp.csr_matrix, scale: float):
    if acc is None:
        return block, scale
    m, s = acc
    if block.nnz == 0:
        return acc
    if m.nnz == 0:
        return block, scale
    if s == scale:
        return _finish(m + block), s
    return _finish(m * s + block * scale), 1.0


def count(
    segs: Iterable[Segment],
    vocab: Vocabulary,
    wc: WindowConfig | None = None,
    sw: SegmentWeighting | None = None,
    *,
    context_size: int | None = None,
    workers: int = 1,
    block_tokens: int = 250_000,
    corpus_digest: str = "",
) -> CooccurrenceMatrix:
    """Count weighted cooccurrences within ``wc.window`` positions.

    Every (target, context) pair inside the window of one segment adds
    ``segment_weight * distance_weight``. Segments never share a window.
    Contexts with id ``>= context_size`` are not recorded but still occupy
    window slots. Blocks of roughly ``block_tokens`` tokens are counted
    independently (in ``workers`` processes when ``workers > 1``) and
    summed in stream order.
    """
    wc = wc or WindowConfig()
    sw = sw or SegmentWeighting()
    v = len(vocab)
    n_ctx = v if context_size is None else int(context_size)
    if not 0 <= n_ctx <= v:
        raise InvalidInputError(f"context_size must be in [0, {v}], got {context_size}")
    if workers < 1:
        raise InvalidInputError("workers must be >= 1")
    shape = (v, n_ctx)
    mu = sw.potential_array(v)
    blocks = _blocks(segs, sw, mu, block_tokens)

    acc = None
    if workers == 1:
        for ids, w, scale in blocks:
            acc = _add(acc, _count_block(ids, w, shape, wc), scale)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pending = []
            scales = []
            for ids, w, scale in blocks:
                pending.append(pool.submit(_count_task, (ids, w, shape, wc)))
                scales.append(scale)
            for fut, scale in zip(pending, scales):
                acc = _add(acc, fut.result(), scale)

    matrix, scale = acc if acc is not None else (sp.csr_matrix(shape, dtype=np.float64), 1.0)
    if matrix.nnz == 0 and sw.is_constant:
        scale = math.exp(-sw.beta * float(sw.energy))
    logger.info("counted %d nonzero pairs over a %dx%d space", matrix.nnz, *shape)
    return CooccurrenceMatrix(matrix, scale, _base_meta(vocab, wc, sw, n_ctx, corpus_digest))


def merge(a: CooccurrenceMatrix, b: CooccurrenceMatrix) -> CooccurrenceMatrix:
    """Entrywise sum of two matrices counted under identical configurations."""
    if a.meta != b.meta:
        diff = sorted(k for k in set(a.meta) | set(b.meta) if a.meta.get(k) != b.meta.get(k))
        raise MetadataMismatchError(f"cannot merge matrices with different metadata: {', '.join(diff)}")
    if a.shape != b.shape:
        raise MetadataMismatchError(f"cannot merge shapes {a.shape} and {b.shape}")
    m, scale = _add((a.matrix, a.scale), b.matrix, b.scale)
    return CooccurrenceMatrix(m, scale, dict(a.meta))

