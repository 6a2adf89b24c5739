"""Binary matrix container and sparse/CSV export.

Container layout (little-endian):
    bytes 0..7   magic b"EFLTMAT1"
    bytes 8..15  rows (uint64)
    bytes 16..23 cols (uint64)
    bytes 24..39 dtype tag, ascii padded with spaces ("complex128"/"float64")
    bytes 40..   payload, row-major

Vectors are stored as (n, 1) matrices.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

MAGIC = b"EFLTMAT1"
_DTYPES = {"complex128": "<c16", "float64": "<f8"}

CSV_HEADER = [
    "experiment", "geometry", "N", "freq_hz", "formulation",
    "cond", "cond_method", "iterations", "residual", "walltime_s", "notes",
]


def save_matrix(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("only 1-D or 2-D arrays supported")
    if arr.dtype == np.complex128:
        tag = "complex128"
    elif arr.dtype == np.float64:
        tag = "float64"
    else:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array(arr.shape, dtype="<u8").tobytes())
        fh.write(tag.ljust(16).encode("ascii"))
        fh.write(np.ascontiguousarray(arr).astype(_DTYPES[tag]).tobytes())


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic {data[:8]!r}")
    rows, cols = np.frombuffer(data[8:24], dtype="<u8")
    tag = data[24:40].decode("ascii").strip()
    if tag not in _DTYPES:
        raise ValueError(f"{path}: unknown dtype tag {tag!r}")
    payload = np.frombuffer(data[40:], dtype=_DTYPES[tag])
    if payload.size != rows * cols:
        raise ValueError(f"{path}: payload size mismatch")
    return payload.reshape(int(rows), int(cols)).astype(
        {"complex128": np.complex128, "float64": np.float64}[tag]
    )


def save_sparse_mm(path, matrix) -> None:
    """Matrix Market coordinate export for the sparse loop/star maps."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))


def format_value(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, rows: list[dict]) -> None:
    """Write experiment rows with the fixed schema; missing fields empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([format_value(row.get(key, "")) for key in CSV_HEADER])
