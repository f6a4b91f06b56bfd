"""On-disk formats for sparse matrices and their JSON metadata sidecars.

Binary layout (little-endian)::

    magic   8 bytes  b"GCESPM01"
    rows    u32
    cols    u32
    nnz     u64
    nnz x (row u32, col u32, value f64)

Entries are written sorted by (row, col) in both the binary and the text
triplet form, so identical matrices give identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError

MATRIX_MAGIC = b"GCESPM01"
_HEADER = struct.Struct("<8sIIQ")
_ENTRY = np.dtype([("row", "<u4"), ("col", "<u4"), ("value", "<f8")])


def _canonical(m: sp.spmatrix) -> sp.coo_matrix:
    csr = sp.csr_matrix(m, dtype=np.float64)
    csr.sum_duplicates()
    csr.sort_indices()
    return csr.tocoo()


def write_triplets(path: str | Path, m: sp.spmatrix) -> None:
    coo = _canonical(m)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            fh.write(f"{r}\t{c}\t{v!r}\n")


def read_triplets(path: str | Path, shape: tuple[int, int]) -> sp.csr_matrix:
    path = Path(path)
    rows, cols, vals = [], [], []
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read triplet matrix ({exc.strerror})") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            try:
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
                if len(parts) != 3:
                    raise ValueError
            except (ValueError, IndexError):
                raise DataFormatError(f"{path}:{lineno}: expected 'target<TAB>context<TAB>weight'") from None
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise DataFormatError(f"{path}:{lineno}: index ({r}, {c}) outside shape {shape}")
            rows.append(r)
            cols.append(c)
            vals.append(v)
    return sp.csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)), shape=shape)


def write_binary(path: str | Path, m: sp.spmatrix) -> None:
    coo = _canonical(m)
    rec = np.empty(coo.nnz, dtype=_ENTRY)
    rec["row"], rec["col"], rec["value"] = coo.row, coo.col, coo.data
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, coo.shape[0], coo.shape[1], coo.nnz))
        fh.write(rec.tobytes())


def read_binary(path: str | Path) -> sp.csr_matrix:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read binary matrix ({exc.strerror})") from exc
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header, expected binary sparse matrix")
    magic, rows, cols, nnz = _HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {MATRIX_MAGIC!r}")
    if len(raw) != _HEADER.size + nnz * _ENTRY.itemsize:
        raise DataFormatError(f"{path}: size does not match {nnz} entries")
    rec = np.frombuffer(raw, dtype=_ENTRY, offset=_HEADER.size)
    return sp.csr_matrix(
        (rec["value"].astype(np.float64), (rec["row"].astype(np.int64), rec["col"].astype(np.int64))),
        shape=(rows, cols),
    )


def write_matrix(path: str | Path, m: sp.spmatrix) -> None:
    """Write by extension: ``.bin`` is binary, anything else text triplets."""
    if Path(path).suffix == ".bin":
        write_binary(path, m)
    else:
        write_triplets(path, m)


def read_matrix(path: str | Path, shape: tuple[int, int]) -> sp.csr_matrix:
    if Path(path).suffix == ".bin":
        m = read_binary(path)
        if m.shape != tuple(shape):
            raise DataFormatError(f"{path}: shape {m.shape} disagrees with metadata {tuple(shape)}")
        return m
    return read_triplets(path, shape)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_meta(path: str | Path, meta: dict[str, Any]) -> None:
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_meta(path: str | Path) -> dict[str, Any]:
    side = sidecar_path(path)
    try:
        return json.loads(side.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataFormatError(f"{side}: missing metadata sidecar for {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{side}: metadata sidecar is not valid JSON ({exc.msg})") from exc
