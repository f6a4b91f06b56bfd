"""Seeded sparse random projection from association rows to dense vectors.

Operator entries are a pure function of ``(seed, row, column)``: a
splitmix64 hash of the packed coordinates picks ``+a``, ``-a`` or ``0`` with
probabilities ``s/2``, ``s/2``, ``1 - s`` where ``a = 1 / sqrt(s * d)``. Any
entry can therefore be recomputed on its own, and disjoint row ranges can be
generated by separate workers without sharing generator state.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError, InvalidInputError
from .weighting import AssociationMatrix

TERNARY = "ternary"
IDENTITY = "identity"

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = (x + _GOLDEN) & _M64
    z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _M64
    z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _M64
    return z ^ (z >> np.uint64(31))


def _uniform(seed: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    packed = (rows.astype(np.uint64) << np.uint64(32)) | cols.astype(np.uint64)
    h = _splitmix64(packed ^ key)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class ProjectionSpec:
    """Shape, seed and sparsity of a random projection.

    ``density`` defaults to ``1 / sqrt(input_dim)``. The ``identity`` scheme
    exists for tests: it requires ``output_dim == input_dim`` and leaves rows
    untouched.
    """

    input_dim: int
    output_dim: int = 300
    seed: int = 0
    density: float | None = None
    scheme: str = TERNARY

    def __post_init__(self):
        if self.output_dim < 1:
            raise InvalidInputError("output_dim must be >= 1")
        if self.output_dim > self.input_dim:
            raise InvalidInputError(
                f"output_dim {self.output_dim} exceeds input_dim {self.input_dim}"
            )
        if self.scheme not in (TERNARY, IDENTITY):
            raise InvalidInputError(f"unknown projection scheme {self.scheme!r}")
        if self.scheme == IDENTITY and self.output_dim != self.input_dim:
            raise InvalidInputError("identity projection needs output_dim == input_dim")
        if self.density is None:
            object.__setattr__(self, "density", 1.0 / math.sqrt(self.input_dim))
        if not 0 < self.density <= 1:
            raise InvalidInputError(f"density must be in (0, 1], got {self.density}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must fit in 64 unsigned bits")

    @property
    def magnitude(self) -> float:
        return 1.0 / math.sqrt(self.density * self.output_dim)

    def to_meta(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "seed": self.seed,
            "density": self.density,
            "scheme": self.scheme,
        }


def projection_entry(spec: ProjectionSpec, row: int, col: int) -> float:
    """Value of a single operator entry, computed without building the rest."""
    if spec.scheme == IDENTITY:
        return 1.0 if row == col else 0.0
    u = _uniform(spec.seed, np.array([row]), np.array([col]))[0]
    s = spec.density
    if u < s / 2:
        return spec.magnitude
    if u < s:
        return -spec.magnitude
    return 0.0


@dataclass(frozen=True)
class Projection:
    spec: ProjectionSpec
    operator: sp.csr_matrix  # input_dim x output_dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.operator.shape


def build_projection(spec: ProjectionSpec, chunk_rows: int = 4096) -> Projection:
    c, d = spec.input_dim, spec.output_dim
    if spec.scheme == IDENTITY:
        return Projection(spec, sp.identity(c, format="csr", dtype=np.float64))
    s, a = spec.density, spec.magnitude
    cols_all = np.arange(d, dtype=np.uint64)
    parts = []
    for start in range(0, c, chunk_rows):
        stop = min(start + chunk_rows, c)
        rows = np.repeat(np.arange(start, stop, dtype=np.uint64), d)
        cols = np.tile(cols_all, stop - start)
        u = _uniform(spec.seed, rows, cols)
        hit = u < s
        vals = np.where(u[hit] < s / 2, a, -a)
        parts.append((rows[hit].astype(np.int64), cols[hit].astype(np.int64), vals))
    r = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, np.int64)
    k = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, np.int64)
    v = np.concatenate([p[2] for p in parts]) if parts else np.empty(0)
    op = sp.csr_matrix((v, (r, k)), shape=(c, d))
    op.sort_indices()
    return Projection(spec, op)


# --------------------------------------------------------------------------
# Dense embeddings
# --------------------------------------------------------------------------

EMBED_MAGIC = b"GCEEMB01"
_EMB_HEADER = struct.Struct("<8sII")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """One dense vector per vocabulary token, in vocabulary id order."""

    vectors: np.ndarray
    tokens: tuple[str, ...]
    normalized: bool = False

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise InvalidInputError(
                f"{self.vectors.shape} vectors do not match {len(self.tokens)} tokens"
            )
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def index(self) -> dict[str, int]:
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {t: i for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_index", idx)
        return idx

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.index[word]]

    def save_text(self, path: str | Path) -> None:
        """word2vec text format, 6 significant digits."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{len(self.tokens)} {self.dim}\n")
            for tok, row in zip(self.tokens, self.vectors):
                fh.write(tok + " " + " ".join(f"{x:.6g}" for x in row) + "\n")

    def save_binary(self, path: str | Path) -> None:
        """Magic, ``V`` and ``d`` as u32, then per row a u32-length UTF-8 token and ``d`` f64."""
        with Path(path).open("wb") as fh:
            fh.write(_EMB_HEADER.pack(EMBED_MAGIC, len(self.tokens), self.dim))
            for tok, row in zip(self.tokens, self.vectors):
                b = tok.encode("utf-8")
                fh.write(struct.pack("<I", len(b)) + b)
                fh.write(np.asarray(row, dtype="<f8").tobytes())

    def save(self, path: str | Path) -> None:
        if Path(path).suffix == ".bin":
            self.save_binary(path)
        else:
            self.save_text(path)

    @classmethod
    def load(cls, path: str | Path, normalized: bool = False) -> "EmbeddingMatrix":
        path = Path(path)
        return cls.load_binary(path, normalized) if path.suffix == ".bin" else cls.load_text(path, normalized)

    @classmethod
    def load_text(cls, path: str | Path, normalized: bool = False) -> "EmbeddingMatrix":
        path = Path(path)
        try:
            fh = path.open(encoding="utf-8")
        except OSError as exc:
            raise DataFormatError(f"{path}: cannot read embeddings ({exc.strerror})") from exc
        with fh:
            header = fh.readline().split()
            if len(header) != 2 or not all(h.isdigit() for h in header):
                raise DataFormatError(f"{path}:1: expected word2vec header 'V d'")
            v, d = int(header[0]), int(header[1])
            tokens, vecs = [], np.zeros((v, d))
            for i in range(v):
                parts = fh.readline().rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise DataFormatError(f"{path}:{i + 2}: expected a token and {d} values")
                tokens.append(parts[0])
                try:
                    vecs[i] = [float(x) for x in parts[1:]]
                except ValueError:
                    raise DataFormatError(f"{path}:{i + 2}: non-numeric vector value") from None
        return cls(vecs, tuple(tokens), normalized)

    @classmethod
    def load_binary(cls, path: str | Path, normalized: bool = False) -> "EmbeddingMatrix":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise DataFormatError(f"{path}: cannot read embeddings ({exc.strerror})") from exc
        if raw[:8] != EMBED_MAGIC:
            raise DataFormatError(f"{path}: bad magic {raw[:8]!r}, expected {EMBED_MAGIC!r}")
        try:
            _, v, d = _EMB_HEADER.unpack_from(raw)
            pos = _EMB_HEADER.size
            tokens, vecs = [], np.zeros((v, d))
            for i in range(v):
                (n,) = struct.unpack_from("<I", raw, pos)
                pos += 4
                tokens.append(raw[pos:pos + n].decode("utf-8"))
                pos += n
                vecs[i] = np.frombuffer(raw, dtype="<f8", count=d, offset=pos)
                pos += 8 * d
        except (struct.error, ValueError, UnicodeDecodeError) as exc:
            raise DataFormatError(f"{path}: truncated or corrupt binary embeddings") from exc
        return cls(vecs, tuple(tokens), normalized)


def normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    out = x.copy()
    nz = norms > 0
    out[nz] /= norms[nz, None]
    return out


def embed(a: AssociationMatrix, p: Projection, tokens: Sequence[str], normalize: bool = True) -> EmbeddingMatrix:
    """Project every association row; optionally scale rows to unit length."""
    if a.shape[1] != p.shape[0]:
        raise InvalidInputError(
            f"association context dimension {a.shape[1]} != projection input dimension {p.shape[0]}"
        )
    if a.shape[0] != len(tokens):
        raise InvalidInputError(f"{a.shape[0]} association rows but {len(tokens)} tokens")
    dense = np.asarray((a.matrix @ p.operator).toarray(), dtype=np.float64)
    if normalize:
        dense = normalize_rows(dense)
    return EmbeddingMatrix(dense, tuple(tokens), normalize)
