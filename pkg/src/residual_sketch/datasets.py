"""Readers and writers for the matrix and vector formats the CLI consumes.

* MatrixMarket coordinate files (1-based indices)
* UCI bag-of-words ``docword`` files: three header lines D, W, NNZ then
  ``docID wordID count`` (1-based)
* MovieLens ``ratings.csv`` (userId, movieId, rating, ...), with ids
  compacted to 0-based rows and columns in order of first appearance
* turnstile matrix streams, one ``i j v`` update per line (0-based)
* turnstile vector streams, one ``i v`` update per line (0-based)

Parsers raise ParseError with the 1-based line number of the first bad line.
"""
from dataclasses import dataclass
import csv

import numpy as np
import scipy.sparse as sp

from .errors import ParseError

MM_BANNER = "%%MatrixMarket"


@dataclass
class Triplets:
    """A sparse matrix as parallel ``rows``, ``cols``, ``vals`` arrays (0-based)."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    shape: tuple

    @classmethod
    def from_lists(cls, rows, cols, vals, shape):
        return cls(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
                   np.asarray(vals, dtype=np.float64), (int(shape[0]), int(shape[1])))

    @classmethod
    def from_matrix(cls, A):
        coo = sp.coo_matrix(A)
        return cls.from_lists(coo.row, coo.col, coo.data, coo.shape)

    @property
    def nnz(self):
        return len(self.vals)

    def __iter__(self):
        return zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist())

    def to_csr(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=self.shape)

    def to_dense(self):
        return self.to_csr().toarray()


def _int(tok, lineno, path, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", lineno, path) from None


def _float(tok, lineno, path, what):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", lineno, path) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite {what} {tok!r}", lineno, path)
    return v


def load_matrixmarket(path):
    """Coordinate MatrixMarket file -> Triplets (symmetric storage is expanded)."""
    rows, cols, vals = [], [], []
    with open(path) as f:
        banner = f.readline()
        parts = banner.lower().split()
        if len(parts) != 5 or parts[0] != MM_BANNER.lower() or parts[1] != "matrix":
            raise ParseError("missing '%%MatrixMarket matrix ...' header", 1, path)
        fmt, field, symmetry = parts[2:]
        if fmt != "coordinate":
            raise ParseError(f"only coordinate format is supported, got {fmt!r}", 1, path)
        if field not in ("real", "integer", "pattern"):
            raise ParseError(f"unsupported field {field!r}", 1, path)
        if symmetry not in ("general", "symmetric", "skew-symmetric"):
            raise ParseError(f"unsupported symmetry {symmetry!r}", 1, path)
        size = None
        stored = 0
        lineno = 1
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            tok = line.split()
            if size is None:
                if len(tok) != 3:
                    raise ParseError("size line must be 'rows cols nnz'", lineno, path)
                size = [_int(t, lineno, path, "size") for t in tok]
                continue
            want = 2 if field == "pattern" else 3
            if len(tok) != want:
                raise ParseError(f"expected {want} fields, got {len(tok)}", lineno, path)
            i = _int(tok[0], lineno, path, "row index")
            j = _int(tok[1], lineno, path, "column index")
            v = 1.0 if field == "pattern" else _float(tok[2], lineno, path, "value")
            if not (1 <= i <= size[0] and 1 <= j <= size[1]):
                raise ParseError(f"entry ({i}, {j}) outside {size[0]}x{size[1]}", lineno, path)
            stored += 1
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
            if symmetry != "general" and i != j:
                rows.append(j - 1)
                cols.append(i - 1)
                vals.append(v if symmetry == "symmetric" else -v)
    if size is None:
        raise ParseError("missing size line", lineno, path)
    if stored != size[2]:
        raise ParseError(f"header announces {size[2]} entries, found {stored}", None, path)
    return Triplets.from_lists(rows, cols, vals, size[:2])


def write_matrixmarket(path, trip, comment=None):
    with open(path, "w") as f:
        f.write(f"{MM_BANNER} matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                f.write(f"% {line}\n")
        f.write(f"{trip.shape[0]} {trip.shape[1]} {trip.nnz}\n")
        for i, j, v in trip:
            f.write(f"{i + 1} {j + 1} {v!r}\n")


def load_uci_bow(path):
    """UCI ``docword`` file -> Triplets of shape (D, W)."""
    header = []
    rows, cols, vals = [], [], []
    with open(path) as f:
        lineno = 0
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            tok = line.split()
            if len(header) < 3:
                if len(tok) != 1:
                    raise ParseError("expected a single integer header value", lineno, path)
                header.append(_int(tok[0], lineno, path, "header value"))
                continue
            if len(tok) != 3:
                raise ParseError(f"expected 'docID wordID count', got {len(tok)} fields",
                                 lineno, path)
            i = _int(tok[0], lineno, path, "docID")
            j = _int(tok[1], lineno, path, "wordID")
            v = _float(tok[2], lineno, path, "count")
            if not (1 <= i <= header[0] and 1 <= j <= header[1]):
                raise ParseError(f"entry ({i}, {j}) outside {header[0]}x{header[1]}",
                                 lineno, path)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if len(header) < 3:
        raise ParseError("truncated header (need D, W, NNZ)", lineno, path)
    if len(vals) != header[2]:
        raise ParseError(f"NNZ header says {header[2]}, found {len(vals)} entries", None, path)
    return Triplets.from_lists(rows, cols, vals, header[:2])


def write_uci_bow(path, trip):
    with open(path, "w") as f:
        f.write(f"{trip.shape[0]}\n{trip.shape[1]}\n{trip.nnz}\n")
        for i, j, v in trip:
            f.write(f"{i + 1} {j + 1} {v:g}\n")


def load_movielens(path):
    """MovieLens ``ratings.csv`` -> users x movies Triplets of raw ratings."""
    users, movies = {}, {}
    rows, cols, vals = [], [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for lineno, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if lineno == 1 and not rec[0].strip().lstrip("-").isdigit():
                continue  # header row
            if len(rec) < 3:
                raise ParseError("expected userId,movieId,rating", lineno, path)
            u = _int(rec[0], lineno, path, "userId")
            m = _int(rec[1], lineno, path, "movieId")
            rows.append(users.setdefault(u, len(users)))
            cols.append(movies.setdefault(m, len(movies)))
            vals.append(_float(rec[2], lineno, path, "rating"))
    return Triplets.from_lists(rows, cols, vals, (len(users), len(movies)))


def load_matrix_stream(path, shape=None):
    """``i j v`` update lines -> Triplets (duplicates kept, in file order).

    Without ``shape`` the dimensions are one past the largest indices seen.
    """
    rows, cols, vals = [], [], []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) != 3:
                raise ParseError(f"expected 'i j v', got {len(tok)} fields", lineno, path)
            i = _int(tok[0], lineno, path, "row index")
            j = _int(tok[1], lineno, path, "column index")
            if i < 0 or j < 0 or (shape is not None and (i >= shape[0] or j >= shape[1])):
                raise ParseError(f"entry ({i}, {j}) out of range", lineno, path)
            rows.append(i)
            cols.append(j)
            vals.append(_float(tok[2], lineno, path, "value"))
    if shape is None:
        shape = (max(rows, default=-1) + 1, max(cols, default=-1) + 1)
    return Triplets.from_lists(rows, cols, vals, shape)


def write_matrix_stream(path, trip):
    with open(path, "w") as f:
        for i, j, v in trip:
            f.write(f"{i} {j} {v!r}\n")


def load_vector_stream(path, n=None):
    """``i v`` update lines -> ``(idx, vals, n)``."""
    idx, vals = [], []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) != 2:
                raise ParseError(f"expected 'i v', got {len(tok)} fields", lineno, path)
            i = _int(tok[0], lineno, path, "index")
            if i < 0 or (n is not None and i >= n):
                raise ParseError(f"index {i} out of range", lineno, path)
            idx.append(i)
            vals.append(_float(tok[1], lineno, path, "value"))
    if n is None:
        n = max(idx, default=-1) + 1
    return np.asarray(idx, dtype=np.int64), np.asarray(vals, dtype=np.float64), int(n)


def write_vector_stream(path, idx, vals):
    with open(path, "w") as f:
        for i, v in zip(np.asarray(idx).tolist(), np.asarray(vals, dtype=float).tolist()):
            f.write(f"{i} {v!r}\n")
