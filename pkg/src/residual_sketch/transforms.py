"""Oblivious sketching matrices: CountSketch, dense JL, OSNAP and Gaussian.

A sketch ``S`` of shape ``m x n`` is stored column by column: input index
``i`` maps to a short support list of ``(row, value)`` pairs. Columns are
drawn from a counter-based generator keyed by ``(seed, i)``, so any single
column can be produced on demand and two sketches with the same spec are
bit-identical.

``apply_left(S, A)`` computes ``S @ A`` and ``apply_right(A, S)`` computes
``A @ S.T``; the right-hand factor of a bilinear sketch ``S A T`` is
therefore described by a sketch whose transpose is ``T``.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp

from . import _random
from .errors import InvalidInput, InvalidSpec

COUNTSKETCH = "countsketch"
DENSE_JL = "jl"
OSNAP = "osnap"
GAUSSIAN = "gaussian"
COMPOSED = "composed"

FAMILIES = (COUNTSKETCH, DENSE_JL, OSNAP, GAUSSIAN)
DENSE_FAMILIES = (DENSE_JL, GAUSSIAN)

DEFAULT_OSNAP_S = 2
INNER_DIM_CAP = 4096


@dataclass(frozen=True)
class SketchSpec:
    """Everything needed to regenerate a sketch: family, shape ``m x n``, seed.

    ``s`` is the per-column sparsity and only matters for OSNAP; it is
    normalized to 1 for CountSketch and to ``m`` for the dense families.
    """

    family: str
    m: int
    n: int
    s: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown sketch family {self.family!r}")
        for name in ("m", "n", "s"):
            v = getattr(self, name)
            if int(v) != v:
                raise InvalidSpec(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        object.__setattr__(self, "seed", int(self.seed))
        if self.m < 1 or self.n < 1:
            raise InvalidSpec(f"dimensions must be >= 1, got m={self.m}, n={self.n}")
        if self.family == COUNTSKETCH:
            object.__setattr__(self, "s", 1)
        elif self.family in DENSE_FAMILIES:
            object.__setattr__(self, "s", self.m)
        elif not 1 <= self.s <= self.m:
            raise InvalidSpec(f"OSNAP needs 1 <= s <= m, got s={self.s}, m={self.m}")

    def to_record(self):
        return f"{self.family},{self.m},{self.n},{self.s},{self.seed}"

    @classmethod
    def from_record(cls, text):
        parts = [p.strip() for p in text.strip().split(",")]
        if len(parts) != 5:
            raise InvalidSpec(f"expected 'family,m,n,s,seed', got {text!r}")
        family, m, n, s, seed = parts
        try:
            return cls(family, int(m), int(n), int(s), int(seed))
        except ValueError as exc:
            raise InvalidSpec(f"bad sketch record {text!r}: {exc}") from exc


def _generate_columns(spec, idx):
    """Support arrays ``(rows, vals)`` of shape ``(len(idx), width)``."""
    idx = np.asarray(idx, dtype=np.int64)
    cols = idx[:, None]
    m, seed = spec.m, spec.seed
    if spec.family == COUNTSKETCH:
        rows = _random.integers(seed, cols, 0, m)
        vals = _random.signs(seed, cols, 1)
    elif spec.family == OSNAP:
        s = spec.s
        rows = np.empty((idx.size, s), dtype=np.int64)
        # Floyd's algorithm: uniform s-subset of [m] without replacement
        for t, j in enumerate(range(m - s, m)):
            r = _random.integers(seed, idx, t, j + 1)
            dup = np.any(rows[:, :t] == r[:, None], axis=1)
            rows[:, t] = np.where(dup, j, r)
        rows.sort(axis=1)
        vals = _random.signs(seed, cols, s + np.arange(s)) / math.sqrt(s)
    elif spec.family == DENSE_JL:
        rows = np.broadcast_to(np.arange(m, dtype=np.int64), (idx.size, m))
        vals = _random.signs(seed, cols, np.arange(m)) / math.sqrt(m)
    else:
        rows = np.broadcast_to(np.arange(m, dtype=np.int64), (idx.size, m))
        vals = _random.normals(seed, cols, np.arange(m)) / math.sqrt(m)
    return rows, vals


class SeededSketch:
    """A materializable ``m x n`` sketching matrix described by a SketchSpec."""

    def __init__(self, spec):
        if not isinstance(spec, SketchSpec):
            raise InvalidSpec(f"expected a SketchSpec, got {type(spec).__name__}")
        self.spec = spec

    def __repr__(self):
        return f"SeededSketch({self.spec.to_record()})"

    def __eq__(self, other):
        return isinstance(other, SeededSketch) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    @property
    def in_dim(self):
        return self.spec.n

    @property
    def out_dim(self):
        return self.spec.m

    @property
    def width(self):
        """Number of nonzeros stored per column."""
        return self.spec.s

    @property
    def is_dense(self):
        return self.spec.family in DENSE_FAMILIES

    def column(self, i):
        """Support of column ``i`` as ``(rows, values)``, generated on demand."""
        if not 0 <= i < self.in_dim:
            raise InvalidInput(f"column {i} out of range [0, {self.in_dim})")
        rows, vals = _generate_columns(self.spec, np.array([i]))
        return rows[0].copy(), vals[0]

    @cached_property
    def supports(self):
        """``(rows, vals)`` for every column, each of shape ``(n, width)``."""
        rows, vals = _generate_columns(self.spec, np.arange(self.in_dim))
        rows = np.ascontiguousarray(rows)
        rows.flags.writeable = False
        vals.flags.writeable = False
        return rows, vals

    @cached_property
    def layers(self):
        """Per-slot views of ``supports``: a tuple of ``width`` pairs
        ``(rows, vals)``, each a contiguous length-n array."""
        rows, vals = self.supports
        return tuple(
            (np.ascontiguousarray(rows[:, t]), np.ascontiguousarray(vals[:, t]))
            for t in range(rows.shape[1])
        )

    @cached_property
    def operator(self):
        """The matrix itself: a dense ndarray or a CSC sparse matrix."""
        rows, vals = self.supports
        if self.is_dense:
            return np.ascontiguousarray(vals.T)
        n, w = rows.shape
        indptr = np.arange(0, n * w + 1, w, dtype=np.int64)
        return sp.csc_matrix((vals.ravel(), rows.ravel(), indptr), shape=(self.out_dim, n))

    def to_dense(self):
        op = self.operator
        return op.toarray() if sp.issparse(op) else np.array(op)

    def record(self):
        return self.spec.to_record()


class ComposedSketch:
    """``outer @ inner``, applied as inner first and then outer.

    The product is never formed explicitly; a sparse inner stage keeps the
    cost of touching the large input proportional to its nonzeros.
    """

    def __init__(self, outer, inner):
        if not isinstance(outer, SeededSketch) or not isinstance(inner, SeededSketch):
            raise InvalidSpec("both stages of a composition must be SeededSketch")
        if outer.in_dim != inner.out_dim:
            raise InvalidSpec(
                f"cannot compose: outer takes {outer.in_dim} inputs, inner emits {inner.out_dim}"
            )
        self.outer = outer
        self.inner = inner

    def __repr__(self):
        return f"ComposedSketch({self.record()})"

    def __eq__(self, other):
        return (
            isinstance(other, ComposedSketch)
            and other.outer == self.outer
            and other.inner == self.inner
        )

    def __hash__(self):
        return hash((self.outer, self.inner))

    @property
    def in_dim(self):
        return self.inner.in_dim

    @property
    def out_dim(self):
        return self.outer.out_dim

    def to_dense(self):
        return apply_left(self.outer, self.inner.to_dense())

    def record(self):
        return f"{self.outer.record()};{self.inner.record()}"


def build_sketch(spec):
    return SeededSketch(spec)


def compose(outer, inner):
    return ComposedSketch(outer, inner)


def sketch_from_record(text):
    """Inverse of ``record()`` for both plain and composed sketches."""
    parts = text.strip().split(";")
    if len(parts) == 1:
        return SeededSketch(SketchSpec.from_record(parts[0]))
    if len(parts) == 2:
        return ComposedSketch(
            SeededSketch(SketchSpec.from_record(parts[0])),
            SeededSketch(SketchSpec.from_record(parts[1])),
        )
    raise InvalidSpec(f"bad sketch record {text!r}")


def _check_input(A):
    if sp.issparse(A):
        A = A.tocsr()
        if not np.all(np.isfinite(A.data)):
            raise InvalidInput("matrix contains NaN or Inf")
        return A.astype(np.float64, copy=False)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInput(f"expected a 2-D matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix contains NaN or Inf")
    return A


def _left_product(op, A):
    if sp.issparse(A) and not sp.issparse(op):
        # dense @ sparse: let the sparse operand drive the loop
        out = (A.T @ op.T).T
    else:
        out = op @ A
    if sp.issparse(out):
        out = out.toarray()
    return np.ascontiguousarray(out, dtype=np.float64)


def apply_left(sk, A):
    """``S @ A`` for a sketch ``S`` and a dense or scipy.sparse matrix ``A``."""
    A = _check_input(A)
    if A.shape[0] != sk.in_dim:
        raise InvalidInput(f"sketch takes {sk.in_dim} rows, matrix has {A.shape[0]}")
    if isinstance(sk, ComposedSketch):
        return _left_product(sk.outer.operator, _left_product(sk.inner.operator, A))
    return _left_product(sk.operator, A)


def apply_right(A, sk):
    """``A @ S.T``; the result has ``sk.out_dim`` columns."""
    A = _check_input(A)
    if A.shape[1] != sk.in_dim:
        raise InvalidInput(f"sketch takes {sk.in_dim} columns, matrix has {A.shape[1]}")
    return apply_left(sk, A.T).T.copy()


def application_cost(sk, A):
    """Scalar multiply-adds needed to push the nonzeros of ``A`` through ``sk``.

    Only the stage that touches ``A`` is counted; for a composition that is
    the inner sketch.
    """
    stage = sk.inner if isinstance(sk, ComposedSketch) else sk
    A = _check_input(A)
    rows = A.tocoo().row if sp.issparse(A) else np.nonzero(A)[0]
    _, vals = stage.supports
    per_col = np.count_nonzero(vals, axis=1)
    return int(per_col[rows].sum())


def sketch_size(k, eps, c_m=1.0):
    """``ceil(c_m * k / eps**2)``: the outer dimension for target accuracy eps."""
    if k < 1 or not 0 < eps:
        raise InvalidSpec(f"need k >= 1 and eps > 0, got k={k}, eps={eps}")
    return max(1, math.ceil(c_m * k / eps**2))


def inner_sketch_size(k, eps, c_in=1.0):
    """``ceil(c_in * k**2 / eps**2)``: CountSketch stage width in a composition."""
    if k < 1 or not 0 < eps:
        raise InvalidSpec(f"need k >= 1 and eps > 0, got k={k}, eps={eps}")
    return max(1, math.ceil(c_in * k * k / eps**2))


def default_inner_dim(m, cap=INNER_DIM_CAP):
    return min(m * m, cap)


def make_sketch(family, m, n, seed=0, s=DEFAULT_OSNAP_S, inner_dim=None):
    """Build a plain sketch, or a JL-over-CountSketch composition for ``"composed"``."""
    if family == COMPOSED:
        inner_m = default_inner_dim(m) if inner_dim is None else int(inner_dim)
        inner = SeededSketch(SketchSpec(COUNTSKETCH, inner_m, n, seed=_random.derive_seed(seed, 2)))
        outer = SeededSketch(SketchSpec(DENSE_JL, m, inner_m, seed=_random.derive_seed(seed, 1)))
        return ComposedSketch(outer, inner)
    return SeededSketch(SketchSpec(family, m, n, s=s, seed=seed))
