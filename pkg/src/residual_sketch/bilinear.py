"""Streaming bilinear sketch ``S A T`` and the rank-k residual estimator.

The state only ever stores the small product. Each turnstile update
``A[i, j] += v`` adds ``v * outer(S[:, i], T[j, :])`` to it, touching
``width(S) * width(T)`` cells. For a composed sketch only the inner
(CountSketch) stages see updates; the dense outer stages are applied once,
when the estimate is requested.

The estimate is ``||SAT - [SAT]_k||_F``; with PCP sketches on both sides it
lies within a ``(1 +- eps)`` factor of ``||A - A_k||_F``.
"""
from dataclasses import dataclass
import json
import time

import numpy as np
import scipy.sparse as sp

from . import _kernels, _random
from .errors import IncompatibleStates, InvalidInput, InvalidSpec
from .linalg import rank_k_residual
from .transforms import (
    ComposedSketch,
    SeededSketch,
    SketchSpec,
    apply_left,
    apply_right,
    make_sketch,
    sketch_from_record,
)

SNAPSHOT_MAGIC = "BILINEAR-SKETCH v1"

# largest dense intermediate (cells) built when batching sparse-family updates
_EXPAND_LIMIT = 1 << 24


def _as_sketch(obj):
    if isinstance(obj, (SeededSketch, ComposedSketch)):
        return obj
    if isinstance(obj, SketchSpec):
        return SeededSketch(obj)
    if isinstance(obj, str):
        return sketch_from_record(obj)
    raise InvalidSpec(f"cannot build a sketch from {type(obj).__name__}")


def _stage(sk):
    return sk.inner if isinstance(sk, ComposedSketch) else sk


def _as_triplets(A):
    """``(rows, cols, vals, shape)`` for dense, scipy.sparse or triplet-like input."""
    if all(hasattr(A, a) for a in ("rows", "cols", "vals", "shape")):
        return (np.asarray(A.rows, dtype=np.int64), np.asarray(A.cols, dtype=np.int64),
                np.asarray(A.vals, dtype=np.float64), tuple(A.shape))
    if sp.issparse(A):
        coo = A.tocoo()
        return (coo.row.astype(np.int64), coo.col.astype(np.int64),
                coo.data.astype(np.float64), coo.shape)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise InvalidInput(f"expected a 2-D matrix, got ndim={A.ndim}")
    r, c = np.nonzero(A)
    return r.astype(np.int64), c.astype(np.int64), A[r, c], A.shape


class BilinearSketchState:
    """Accumulator for ``S A T`` under single-entry turnstile updates.

    ``left`` is the ``m_S x n`` sketch ``S``; ``right`` is the ``m_T x d``
    sketch whose transpose is ``T``.
    """

    def __init__(self, left, right):
        self.left = _as_sketch(left)
        self.right = _as_sketch(right)
        self._sl = _stage(self.left)
        self._sr = _stage(self.right)
        self.acc = np.zeros((self._sl.out_dim, self._sr.out_dim))

    def __repr__(self):
        return (f"BilinearSketchState(left={self.left.record()!r}, "
                f"right={self.right.record()!r})")

    @property
    def shape(self):
        """Shape ``(n, d)`` of the matrices this state can sketch."""
        return self.left.in_dim, self.right.in_dim

    def prepare(self):
        """Generate every sketch column now rather than on first use."""
        for sk in (self.left, self.right):
            for stage in ((sk.outer, sk.inner) if isinstance(sk, ComposedSketch) else (sk,)):
                stage.operator
                if not stage.is_dense:
                    stage.layers
        if _kernels.scatter_outer is not None and not (self._sl.is_dense or self._sr.is_dense):
            # compile (or load from cache) outside any timed region
            empty = np.zeros(0, dtype=np.int64)
            _kernels.scatter_outer(self.acc, empty, empty, np.zeros(0),
                                   *self._sl.supports, *self._sr.supports)
        return self

    def _check_index(self, i, j):
        n, d = self.shape
        if not (0 <= i < n and 0 <= j < d):
            raise InvalidInput(f"entry ({i}, {j}) outside a {n}x{d} matrix")

    def update(self, i, j, v):
        """``A[i, j] += v``."""
        self._check_index(i, j)
        if not np.isfinite(v):
            raise InvalidInput(f"non-finite update value {v!r}")
        if v == 0:
            return
        rl, vl = self._sl.supports
        rr, vr = self._sr.supports
        if rl.shape[1] == 1 and rr.shape[1] == 1:
            self.acc[rl[i, 0], rr[j, 0]] += v * vl[i, 0] * vr[j, 0]
        else:
            self.acc[np.ix_(rl[i], rr[j])] += v * np.outer(vl[i], vr[j])

    def update_batch(self, rows, cols, vals):
        """Apply many updates at once; equivalent to calling ``update`` on each."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not rows.size == cols.size == vals.size:
            raise InvalidInput("rows, cols and vals must have equal length")
        if rows.size == 0:
            return
        n, d = self.shape
        if rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= d:
            raise InvalidInput(f"update index outside a {n}x{d} matrix")
        if not np.all(np.isfinite(vals)):
            raise InvalidInput("non-finite update value")
        if self._sl.is_dense or self._sr.is_dense:
            A = sp.csr_matrix((vals, (rows, cols)), shape=(n, d))
            self.acc += apply_left(self._sl, apply_right(A, self._sr))
            return
        if _kernels.scatter_outer is not None:
            rl, vl = self._sl.supports
            rr, vr = self._sr.supports
            _kernels.scatter_outer(self.acc, rows, cols, vals, rl, vl, rr, vr)
            return
        ml, mr = self.acc.shape
        if ml * d <= _EXPAND_LIMIT:
            # S @ A as a dense ml x d block, then the sparse right stage
            SA = np.zeros(ml * d)
            for keys, w in self._sl.layers:
                SA += np.bincount(keys[rows] * d + cols, weights=w[rows] * vals, minlength=ml * d)
            self.acc += apply_right(SA.reshape(ml, d), self._sr)
        elif n * mr <= _EXPAND_LIMIT:
            AT = np.zeros(n * mr)
            for keys, w in self._sr.layers:
                AT += np.bincount(rows * mr + keys[cols], weights=w[cols] * vals, minlength=n * mr)
            self.acc += apply_left(self._sl, AT.reshape(n, mr))
        else:
            for lk, lw in self._sl.layers:
                base = lk[rows] * mr
                lv = lw[rows] * vals
                for rk, rw in self._sr.layers:
                    self.acc += np.bincount(base + rk[cols], weights=lv * rw[cols],
                                            minlength=self.acc.size).reshape(self.acc.shape)

    def update_matrix(self, A):
        """Stream every nonzero of ``A`` (dense, sparse or triplets) into the state."""
        r, c, v, shape = _as_triplets(A)
        if tuple(shape) != self.shape:
            raise InvalidInput(f"matrix shape {tuple(shape)} != sketch input shape {self.shape}")
        self.update_batch(r, c, v)

    def compatible(self, other):
        return (self.left.record() == other.left.record()
                and self.right.record() == other.right.record())

    def merge(self, other):
        """New state sketching the sum of both update streams."""
        if not isinstance(other, BilinearSketchState) or not self.compatible(other):
            raise IncompatibleStates("states were built from different sketches")
        out = self.copy()
        out.acc += other.acc
        return out

    def copy(self):
        out = BilinearSketchState(self.left, self.right)
        out.acc = self.acc.copy()
        return out

    def finalized(self):
        """The ``m_S x m_T`` matrix ``S A T`` with outer stages applied."""
        M = self.acc
        if isinstance(self.left, ComposedSketch):
            M = apply_left(self.left.outer, M)
        if isinstance(self.right, ComposedSketch):
            M = apply_right(M, self.right.outer)
        return M

    def estimate_residual(self, k):
        """``||SAT - [SAT]_k||_F``, the estimate of ``||A - A_k||_F``."""
        if k < 0:
            raise InvalidInput(f"k must be nonnegative, got {k}")
        return rank_k_residual(self.finalized(), k)

    def save(self, path):
        """Write a snapshot: one JSON header line, then little-endian float64 cells."""
        header = {
            "magic": SNAPSHOT_MAGIC,
            "left": self.left.record(),
            "right": self.right.record(),
            "rows": self.acc.shape[0],
            "cols": self.acc.shape[1],
        }
        with open(path, "wb") as f:
            f.write((json.dumps(header) + "\n").encode("ascii"))
            f.write(np.ascontiguousarray(self.acc, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            header = json.loads(f.readline().decode("ascii"))
            payload = f.read()
        if header.get("magic") != SNAPSHOT_MAGIC:
            raise InvalidInput(f"{path}: not a bilinear sketch snapshot")
        st = cls(header["left"], header["right"])
        shape = (header["rows"], header["cols"])
        if shape != st.acc.shape or len(payload) != 8 * shape[0] * shape[1]:
            raise InvalidInput(f"{path}: snapshot payload does not match header")
        st.acc = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
        return st


def init(left, right):
    return BilinearSketchState(left, right)


def make_state(family, m, shape, seed=0, s=2, inner_dim=None):
    """State for an ``n x d`` input with independent left and right sketches."""
    n, d = shape
    left = make_sketch(family, m, n, seed=_random.derive_seed(seed, 0), s=s, inner_dim=inner_dim)
    right = make_sketch(family, m, d, seed=_random.derive_seed(seed, 1), s=s, inner_dim=inner_dim)
    return BilinearSketchState(left, right)


@dataclass
class BatchEstimate:
    estimate: float
    sketch_seconds: float
    svd_seconds: float
    state: BilinearSketchState


def batch_estimate(A, k, left, right):
    """Stream every nonzero of ``A`` through a fresh state and estimate.

    Sketch time covers ingestion only (sketch generation is done up
    front); SVD time covers finalizing composed stages and the small SVD.
    """
    st = BilinearSketchState(left, right)
    r, c, v, shape = _as_triplets(A)
    if tuple(shape) != st.shape:
        raise InvalidInput(f"matrix shape {tuple(shape)} != sketch input shape {st.shape}")
    st.prepare()
    t0 = time.perf_counter()
    st.update_batch(r, c, v)
    t1 = time.perf_counter()
    est = st.estimate_residual(k)
    t2 = time.perf_counter()
    return BatchEstimate(est, t1 - t0, t2 - t1, st)
