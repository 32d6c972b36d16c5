"""Estimators of ``||x||_p^p`` under turnstile updates.

The vector residual pipeline treats its norm estimator as a black box with
``update`` / ``update_batch`` / ``finalize`` / ``merge``. ``ExactLpBackend``
keeps the whole vector and is exact; a sublinear-space estimator can be
dropped in by subclassing ``LpEstimator``.
"""
from abc import ABC, abstractmethod
import copy

import numpy as np

from .errors import IncompatibleStates, InvalidInput


class LpEstimator(ABC):
    """Linear sketch of a length-``n`` vector that estimates ``||x||_p^p``.

    ``error_factor`` is the advertised relative error: ``finalize(p)`` lies
    in ``(1 +- error_factor) * ||x||_p^p`` with the backend's success
    probability.
    """

    error_factor = 0.0

    def __init__(self, n):
        if n < 1:
            raise InvalidInput(f"universe size must be >= 1, got {n}")
        self.n = int(n)

    def _check(self, i):
        if not 0 <= i < self.n:
            raise InvalidInput(f"index {i} outside [0, {self.n})")

    @abstractmethod
    def update(self, i, v):
        """``x[i] += v``."""

    def update_batch(self, idx, vals):
        for i, v in zip(np.asarray(idx).tolist(), np.asarray(vals, dtype=float).tolist()):
            self.update(i, v)

    @abstractmethod
    def finalize(self, p):
        """Estimate of ``sum |x_i|**p``."""

    @abstractmethod
    def merge(self, other):
        """New estimator for the sum of both update streams."""

    def copy(self):
        return copy.deepcopy(self)


class ExactLpBackend(LpEstimator):
    """Dense accumulator; exact up to float rounding."""

    error_factor = 0.0

    def __init__(self, n):
        super().__init__(n)
        self.x = np.zeros(self.n)

    def update(self, i, v):
        self._check(i)
        self.x[i] += v

    def update_batch(self, idx, vals):
        idx = np.asarray(idx, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if idx.size != vals.size:
            raise InvalidInput("idx and vals must have equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise InvalidInput(f"update index outside [0, {self.n})")
        np.add.at(self.x, idx, vals)

    def finalize(self, p):
        if p < 1:
            raise InvalidInput(f"p must be >= 1, got {p}")
        return float(np.sum(np.abs(self.x) ** p))

    def merge(self, other):
        if not isinstance(other, ExactLpBackend) or other.n != self.n:
            raise IncompatibleStates("can only merge exact backends of equal size")
        out = ExactLpBackend(self.n)
        out.x = self.x + other.x
        return out
