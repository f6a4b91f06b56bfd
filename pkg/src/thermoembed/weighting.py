"""Shifted, context-smoothed positive PMI over a cooccurrence matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import formats
from .cooccur import CooccurrenceMatrix
from .errors import InvalidInputError, MetadataMismatchError


@dataclass(frozen=True)
class AssociationMatrix:
    """Sparse PPMI values; only strictly positive entries are stored."""

    matrix: sp.csr_matrix
    meta: dict

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def save(self, path: str | Path) -> None:
        formats.write_matrix(path, self.matrix)
        formats.write_meta(path, self.meta)

    @classmethod
    def load(cls, path: str | Path) -> "AssociationMatrix":
        meta = formats.read_meta(path)
        if meta.get("kind") != "ppmi":
            raise MetadataMismatchError(f"{path}: expected a ppmi matrix, sidecar says {meta.get('kind')!r}")
        return cls(formats.read_matrix(path, tuple(meta["shape"])), meta)


def to_ppmi(m: CooccurrenceMatrix, shift_k: float = 1.0, alpha: float = 0.75) -> AssociationMatrix:
    """Positive PMI with context-distribution smoothing and a log shift.

    Each entry becomes
    ``max(0, ln(w * S_alpha / (row_t * col_c**alpha)) - ln k)`` where
    ``S_alpha`` sums ``col**alpha`` over all contexts. The result is unchanged
    when every weight is multiplied by the same positive constant.
    """
    if not shift_k >= 1:
        raise InvalidInputError(f"shift_k must be >= 1, got {shift_k}")
    if not 0 < alpha <= 1:
        raise InvalidInputError(f"alpha must be in (0, 1], got {alpha}")
    w = sp.csr_matrix(m.matrix, dtype=np.float64, copy=True)
    w.sum_duplicates()
    if not (m.scale > 0 and float(w.sum()) > 0):
        raise InvalidInputError("cannot weight a matrix with zero total mass")
    # weights are scale * w; stay in logs so a tiny scale cannot underflow
    log_scale = math.log(m.scale)

    row_mass = np.asarray(w.sum(axis=1)).ravel()
    col_mass = np.asarray(w.sum(axis=0)).ravel()
    nz = col_mass > 0
    a_log_col = np.full(col_mass.shape, -np.inf)
    a_log_col[nz] = alpha * (np.log(col_mass[nz]) + log_scale)
    log_s_alpha = float(np.logaddexp.reduce(a_log_col[nz]))

    w.eliminate_zeros()
    coo = w.tocoo()
    pmi = (
        np.log(coo.data)
        + log_scale
        + log_s_alpha
        - (np.log(row_mass[coo.row]) + log_scale)
        - a_log_col[coo.col]
        - math.log(shift_k)
    )
    keep = pmi > 0
    out = sp.csr_matrix((pmi[keep], (coo.row[keep], coo.col[keep])), shape=w.shape)
    out.sort_indices()
    meta = {
        "kind": "ppmi",
        "shape": list(w.shape),
        "shift_k": float(shift_k),
        "alpha": float(alpha),
        "source": {k: v for k, v in m.meta.items() if k != "kind"},
    }
    return AssociationMatrix(out, meta)
