"""Residual l_p norm estimation and l_p sparse recovery for p > 2.

The pipeline runs two linear sketches over the same turnstile stream:

* a CountSketch table of ``rows x buckets`` counters, used afterwards to
  estimate every coordinate (median over rows) and pick the ``k`` largest
  estimates as the candidate set ``J``;
* an ``||x||_p^p`` estimator, into which ``-xhat_j`` is pushed for each
  ``j in J`` before it is finalized.

The finalized value estimates ``||x - x_k||_p^p`` and ``xhat_J`` itself is
a k-sparse approximation of ``x``.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from . import _random
from .errors import IncompatibleStates, InvalidInput, InvalidSpec, UnsupportedP
from .hashing import FourwiseSign, PairwiseHash
from .lp_backend import ExactLpBackend

DEFAULT_C_B = 1.0
DEFAULT_C_L = 3.0


def _ceil(x):
    # ceil that ignores float noise like 99.99999999999997 -> 100
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.ceil(x)


def bucket_count(n, k, p, eps, c_b=DEFAULT_C_B):
    """Buckets per row: ``ceil(c_b * eps**(-2p/(p-1)) * k**(2/p) * n**(1-2/p))``,
    clamped to ``[1, n]``."""
    if p <= 2:
        raise UnsupportedP(f"residual estimation needs p > 2, got p={p}")
    if not 0 < eps <= 1:
        raise InvalidSpec(f"eps must lie in (0, 1], got {eps}")
    if not 1 <= k <= n:
        raise InvalidSpec(f"need 1 <= k <= n, got k={k}, n={n}")
    b = c_b * eps ** (-2.0 * p / (p - 1)) * k ** (2.0 / p) * n ** (1.0 - 2.0 / p)
    return min(max(_ceil(b), 1), n)


def row_count(n, c_l=DEFAULT_C_L):
    """``ceil(c_l * log2 n)`` rows, at least one."""
    return max(1, _ceil(c_l * math.log2(n))) if n > 1 else 1


@dataclass
class TopKCandidates:
    """Candidate coordinates sorted by ``|estimate|`` descending, ties to the lower index."""

    indices: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.indices)

    def pairs(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self, n):
        out = np.zeros(n)
        out[self.indices] = self.values
        return out


def select_top_k(estimates, k):
    """Indices of the ``k`` largest ``|estimates|``; ties go to the lower index."""
    estimates = np.asarray(estimates, dtype=np.float64)
    k = min(int(k), estimates.size)
    if k <= 0:
        return np.zeros(0, dtype=np.int64)
    # lexsort: last key is primary
    order = np.lexsort((np.arange(estimates.size), -np.abs(estimates)))
    return order[:k].astype(np.int64)


class VectorCountSketch:
    """CountSketch over ``[n]`` with ``rows`` pairwise bucket hashes and 4-wise signs."""

    def __init__(self, n, buckets, rows, seed=0):
        if n < 1 or buckets < 1 or rows < 1:
            raise InvalidSpec(f"need n, buckets, rows >= 1, got {n}, {buckets}, {rows}")
        self.n = int(n)
        self.buckets = int(buckets)
        self.rows = int(rows)
        self.seed = int(seed)
        self.hashes = [PairwiseHash(self.buckets, _random.derive_seed(seed, 2 * j))
                       for j in range(self.rows)]
        self.signs = [FourwiseSign(_random.derive_seed(seed, 2 * j + 1))
                      for j in range(self.rows)]
        self.table = np.zeros((self.rows, self.buckets))

    def __repr__(self):
        return (f"VectorCountSketch(n={self.n}, buckets={self.buckets}, "
                f"rows={self.rows}, seed={self.seed})")

    @cached_property
    def bucket_of(self):
        """``(rows, n)`` array of bucket indices."""
        idx = np.arange(self.n)
        return np.stack([h(idx) for h in self.hashes])

    @cached_property
    def sign_of(self):
        """``(rows, n)`` array of +-1 signs."""
        idx = np.arange(self.n)
        return np.stack([g(idx) for g in self.signs])

    def _check(self, i):
        if not 0 <= i < self.n:
            raise InvalidInput(f"index {i} outside [0, {self.n})")

    def update(self, i, v):
        """``x[i] += v``: one counter per row moves by ``v * sign``."""
        self._check(i)
        if not np.isfinite(v):
            raise InvalidInput(f"non-finite update value {v!r}")
        self.table[np.arange(self.rows), self.bucket_of[:, i]] += v * self.sign_of[:, i]

    def update_batch(self, idx, vals):
        idx = np.asarray(idx, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if idx.size != vals.size:
            raise InvalidInput("idx and vals must have equal length")
        if idx.size == 0:
            return
        if idx.min() < 0 or idx.max() >= self.n:
            raise InvalidInput(f"update index outside [0, {self.n})")
        if not np.all(np.isfinite(vals)):
            raise InvalidInput("non-finite update value")
        h, s = self.bucket_of, self.sign_of
        if idx.size > self.n:
            # fold the batch into a dense delta first
            x = np.bincount(idx, weights=vals, minlength=self.n)
            for j in range(self.rows):
                self.table[j] += np.bincount(h[j], weights=s[j] * x, minlength=self.buckets)
        else:
            for j in range(self.rows):
                self.table[j] += np.bincount(h[j, idx], weights=s[j, idx] * vals,
                                             minlength=self.buckets)

    def row_estimates(self, idx=None):
        """``sign_j(i) * table[j, h_j(i)]`` for every row, shape ``(rows, len(idx))``."""
        if idx is None:
            h, s = self.bucket_of, self.sign_of
        else:
            idx = np.asarray(idx, dtype=np.int64)
            h, s = self.bucket_of[:, idx], self.sign_of[:, idx]
        return np.take_along_axis(self.table, h, axis=1) * s

    def point_estimates(self):
        """Median-of-rows estimate of every coordinate."""
        return np.median(self.row_estimates(), axis=0)

    def point_estimate(self, i):
        self._check(i)
        return float(np.median(self.row_estimates([i])[:, 0]))

    def top_k(self, k):
        """The ``k`` coordinates with the largest ``|estimate|``, scanning all of ``[n]``."""
        if not 0 <= k <= self.n:
            raise InvalidInput(f"k must lie in [0, {self.n}], got {k}")
        est = self.point_estimates()
        J = select_top_k(est, k)
        return TopKCandidates(J, est[J])

    def compatible(self, other):
        return (isinstance(other, VectorCountSketch)
                and (self.n, self.buckets, self.rows, self.seed)
                == (other.n, other.buckets, other.rows, other.seed))

    def merge(self, other):
        if not self.compatible(other):
            raise IncompatibleStates("count sketches differ in shape or seed")
        out = self.copy()
        out.table += other.table
        return out

    def copy(self):
        out = VectorCountSketch.__new__(VectorCountSketch)
        out.__dict__.update(self.__dict__)
        out.table = self.table.copy()
        return out


def cs_update(cs, i, v):
    cs.update(i, v)


def point_estimate(cs, i):
    return cs.point_estimate(i)


def top_k_candidates(cs, k):
    return cs.top_k(k)


class ResidualPipeline:
    """Streaming estimator of ``||x - x_k||_p^p`` with k-sparse recovery.

    Parameters
    ----------
    n, k, p, eps : problem size, sparsity, norm exponent (> 2) and accuracy.
    c_b, c_l : constants in the bucket and row counts.
    seed : drives every hash function.
    backend : an ``LpEstimator``; defaults to ``ExactLpBackend(n)``.
    buckets, rows : override the sizing formulas.
    """

    def __init__(self, n, k, p, eps, c_b=DEFAULT_C_B, c_l=DEFAULT_C_L, seed=0,
                 backend=None, buckets=None, rows=None):
        if p <= 2:
            raise UnsupportedP(f"residual estimation needs p > 2, got p={p}")
        if not 0 <= k <= n:
            raise InvalidSpec(f"need 0 <= k <= n, got k={k}, n={n}")
        self.n, self.k, self.p, self.eps = int(n), int(k), float(p), float(eps)
        if buckets is None:
            buckets = bucket_count(n, max(k, 1), p, eps, c_b)
        if rows is None:
            rows = row_count(n, c_l)
        self.cs = VectorCountSketch(n, buckets, rows, seed)
        self.lp = ExactLpBackend(n) if backend is None else backend
        if self.lp.n != self.n:
            raise InvalidSpec(f"backend size {self.lp.n} != n={self.n}")

    def __repr__(self):
        return (f"ResidualPipeline(n={self.n}, k={self.k}, p={self.p}, eps={self.eps}, "
                f"buckets={self.cs.buckets}, rows={self.cs.rows})")

    def update(self, i, v):
        self.cs.update(i, v)
        self.lp.update(i, v)

    def update_batch(self, idx, vals):
        self.cs.update_batch(idx, vals)
        self.lp.update_batch(idx, vals)

    def candidates(self):
        return self.cs.top_k(self.k)

    def sparse_recover(self):
        """``xhat_J`` as a TopKCandidates."""
        return self.candidates()

    def residual_estimate(self):
        """Estimate of ``||x - x_k||_p^p``.

        The subtraction of ``xhat_J`` happens on a copy of the norm
        estimator, so the pipeline can keep ingesting afterwards.
        """
        J = self.candidates()
        lp = self.lp.copy()
        lp.update_batch(J.indices, -J.values)
        return lp.finalize(self.p)

    def merge(self, other):
        if not isinstance(other, ResidualPipeline) or (self.k, self.p) != (other.k, other.p):
            raise IncompatibleStates("pipelines differ in k or p")
        out = ResidualPipeline.__new__(ResidualPipeline)
        out.__dict__.update(self.__dict__)
        out.cs = self.cs.merge(other.cs)
        out.lp = self.lp.merge(other.lp)
        return out


def residual_estimate(pipe):
    return pipe.residual_estimate()


def sparse_recover(pipe):
    return pipe.sparse_recover()
