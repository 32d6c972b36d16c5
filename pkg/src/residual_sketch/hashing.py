"""Polynomial hash families over the Mersenne prime field GF(2**61 - 1).

``PairwiseHash`` maps ``[n] -> [buckets]`` with a random degree-1
polynomial, ``FourwiseSign`` maps ``[n] -> {-1, +1}`` with a random
degree-3 polynomial. Both evaluate on whole numpy arrays; the 61-bit
modular product is split into 31/30-bit halves so nothing overflows
uint64.
"""
import numpy as np

from .errors import InvalidSpec

MERSENNE_EXP = 61
MERSENNE_PRIME = (1 << MERSENNE_EXP) - 1

_P = np.uint64(MERSENNE_PRIME)
_LO31 = np.uint64((1 << 31) - 1)
_LO30 = np.uint64((1 << 30) - 1)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S61 = np.uint64(MERSENNE_EXP)


def mod_p(x):
    """Reduce uint64 values modulo 2**61 - 1."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x & _P) + (x >> _S61)
    return np.where(x >= _P, x - _P, x)


def mulmod(a, x):
    """``a * x mod (2**61 - 1)`` for uint64 arrays with entries below the prime."""
    a = np.asarray(a, dtype=np.uint64)
    x = np.asarray(x, dtype=np.uint64)
    ah, al = a >> _S31, a & _LO31
    xh, xl = x >> _S31, x & _LO31
    mid = ah * xl + al * xh
    # 2**62 == 2 and 2**61 == 1 (mod p)
    total = (ah * xh << np.uint64(1)) + (mid >> _S30) + ((mid & _LO30) << _S31) + al * xl
    return mod_p(total)


def polyval_mod(coeffs, x):
    """Horner evaluation of ``sum(coeffs[d] * x**d) mod p``; coeffs low-order first."""
    x = mod_p(np.asarray(x, dtype=np.uint64))
    acc = np.full(x.shape, np.uint64(coeffs[-1]), dtype=np.uint64)
    for c in reversed(coeffs[:-1]):
        acc = mod_p(mulmod(acc, x) + np.uint64(c))
    return acc


def _coefficients(seed, kind, degree):
    """Coefficients drawn deterministically from ``(seed, kind)``; the leading
    one is nonzero so the polynomial has full degree."""
    rng = np.random.default_rng([int(seed) & ((1 << 64) - 1), kind])
    lead = int(rng.integers(1, MERSENNE_PRIME, dtype=np.uint64))
    rest = [int(c) for c in rng.integers(0, MERSENNE_PRIME, size=degree, dtype=np.uint64)]
    return tuple(rest + [lead])


class PairwiseHash:
    """``h(i) = ((a*i + b) mod p) mod buckets`` with ``a in [1, p)``, ``b in [0, p)``."""

    kind = "pairwise"

    def __init__(self, buckets, seed):
        if buckets < 1:
            raise InvalidSpec(f"buckets must be >= 1, got {buckets}")
        self.buckets = int(buckets)
        self.seed = int(seed)
        self.b, self.a = _coefficients(seed, 2, 1)

    def __call__(self, i):
        v = polyval_mod((self.b, self.a), i)
        return (v % np.uint64(self.buckets)).astype(np.int64)


class FourwiseSign:
    """Random cubic over the field; the low bit of the value picks the sign."""

    kind = "fourwise"

    def __init__(self, seed):
        self.seed = int(seed)
        self.coeffs = _coefficients(seed, 4, 3)

    def __call__(self, i):
        v = polyval_mod(self.coeffs, i)
        return 1.0 - 2.0 * (v & np.uint64(1)).astype(np.float64)
