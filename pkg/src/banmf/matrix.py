"""Dense and Boolean matrix helpers.

Dense matrices are 2-D ``float64`` numpy arrays; Boolean matrices are 2-D
``uint8`` arrays holding only 0 and 1.  Every other module goes through
:func:`as_dense` / :func:`as_bool` at its boundary so that shape and value
checks happen in one place.
"""
from __future__ import annotations

import csv
import io
import os
from typing import Iterable

import numpy as np

MISSING_TOKENS = frozenset({"?", "", "na", "nan", "NA", "NaN", "null", "None"})


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class MatrixParseError(ValueError):
    """A CSV matrix file could not be parsed.

    ``row`` and ``col`` are 1-based positions in the data (header excluded).
    """

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


def as_dense(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, order="C")
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    return arr


def as_bool(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    if arr.dtype == np.bool_:
        return arr.astype(np.uint8)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("Boolean matrix entries must be 0 or 1")
    return np.ascontiguousarray(arr, dtype=np.uint8)


def _check_inner(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(
            f"shape mismatch: {a.shape[0]}x{a.shape[1]} vs {b.shape[0]}x{b.shape[1]}"
        )


def mat_mul(a, b) -> np.ndarray:
    a, b = as_dense(a), as_dense(b)
    _check_inner(a, b)
    return a @ b


def bool_mat_mul(w, h) -> np.ndarray:
    """Boolean product: entry (i, j) is 1 iff some l has w[i, l] = h[l, j] = 1."""
    w, h = as_bool(w), as_bool(h)
    _check_inner(w, h)
    # integer product counts witnesses; any witness makes the entry 1
    return (w.astype(np.int32) @ h.astype(np.int32) > 0).astype(np.uint8)


def frobenius_error(a, b) -> float:
    a, b = as_dense(a), as_dense(b)
    _check_same(a, b)
    return float(np.linalg.norm(a - b))


def hamming_error(x, xhat) -> int:
    x, xhat = as_bool(x), as_bool(xhat)
    _check_same(x, xhat)
    return int(np.count_nonzero(x != xhat))


def boolean_relative_error(x, xhat) -> float:
    """Hamming error divided by the total entry count ``rows * cols``."""
    x = as_bool(x)
    return hamming_error(x, xhat) / x.size


# -- CSV I/O ---------------------------------------------------------------

def _parse_rows(lines: Iterable[list[str]], binary: bool) -> list[list]:
    rows = []
    for r, fields in enumerate(lines, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        row = []
        for c, tok in enumerate(fields, start=1):
            tok = tok.strip()
            where = f"({r},{c})"
            if tok in MISSING_TOKENS:
                raise MatrixParseError(
                    f"missing value {tok!r} at {where}: remove incomplete rows before factorizing",
                    r, c,
                )
            if binary:
                if tok not in ("0", "1"):
                    raise MatrixParseError(f"invalid token {tok!r} at {where}: expected 0 or 1", r, c)
                row.append(int(tok))
            else:
                try:
                    row.append(float(tok))
                except ValueError:
                    raise MatrixParseError(f"invalid number {tok!r} at {where}", r, c) from None
        if rows and len(row) != len(rows[0]):
            raise MatrixParseError(
                f"row {r} has {len(row)} columns, expected {len(rows[0])}", r, None
            )
        rows.append(row)
    if not rows:
        raise MatrixParseError("no data rows found")
    return rows


def parse_csv(text: str, binary: bool = True, header: bool = False) -> np.ndarray:
    lines = list(csv.reader(io.StringIO(text)))
    if header:
        lines = lines[1:]
    rows = _parse_rows(lines, binary)
    return as_bool(rows) if binary else as_dense(rows)


def read_csv(path: str | os.PathLike, binary: bool = True, header: bool = False) -> np.ndarray:
    with open(path, newline="") as fh:
        return parse_csv(fh.read(), binary=binary, header=header)


def format_csv(a: np.ndarray) -> str:
    a = np.asarray(a)
    if a.dtype.kind in "biu":
        lines = [",".join(str(int(v)) for v in row) for row in a]
    else:
        # repr round-trips float64 exactly
        lines = [",".join(repr(float(v)) for v in row) for row in a]
    return "\n".join(lines) + "\n"


def write_csv(path: str | os.PathLike, a: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(a))
