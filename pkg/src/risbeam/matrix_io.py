"""Matrix export/import.

Binary container layout (all little-endian):

    bytes 0-3   magic "RISM"
    bytes 4-7   format version, u32 (currently 1)
    bytes 8-15  rows, cols as u32 each
    then rows*cols complex64 values, row-major (float32 re/im pairs)

The binary format is compact but single-precision. For lossless debugging
dumps use the CSV form: header ``row,col,re,im``, one entry per line with
full-precision decimal floats.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import DomainError

MAGIC = b"RISM"
VERSION = 1

__all__ = ["save_matrix", "load_matrix", "matrix_to_csv", "matrix_from_csv"]


def save_matrix(path, m: np.ndarray) -> None:
    m = np.asarray(m)
    if m.ndim != 2:
        raise DomainError("only 2-D matrices are supported")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.array([VERSION, m.shape[0], m.shape[1]], dtype="<u4").tobytes())
        f.write(np.ascontiguousarray(m, dtype="<c8").tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise DomainError(f"{path}: bad magic bytes, not a RISM container")
    header = np.frombuffer(raw[4:16], dtype="<u4")
    if header.size != 3:
        raise DomainError(f"{path}: truncated header")
    version, rows, cols = (int(v) for v in header)
    if version != VERSION:
        raise DomainError(f"{path}: unsupported container version {version}")
    data = np.frombuffer(raw[16:], dtype="<c8")
    if data.size != rows * cols:
        raise DomainError(f"{path}: payload size does not match {rows}x{cols}")
    return data.reshape(rows, cols).astype(complex)


def matrix_to_csv(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DomainError("only 2-D matrices are supported")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["row", "col", "re", "im"])
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                writer.writerow([i, j, repr(m[i, j].real), repr(m[i, j].imag)])


def matrix_from_csv(path) -> np.ndarray:
    entries = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["row", "col", "re", "im"]:
            raise DomainError(f"{path}: expected header row,col,re,im")
        for line in reader:
            if not line:
                continue
            i, j = int(line[0]), int(line[1])
            entries.append((i, j, float(line[2]), float(line[3])))
    if not entries:
        raise DomainError(f"{path}: no matrix entries")
    rows = max(e[0] for e in entries) + 1
    cols = max(e[1] for e in entries) + 1
    m = np.zeros((rows, cols), dtype=complex)
    for i, j, re, im in entries:
        m[i, j] = re + 1j * im
    return m
