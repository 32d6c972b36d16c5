"""Counter-based random bits keyed by (seed, column, stream).

Every column of a sketch can be regenerated on its own without touching
the others, which is what streaming updates need. The mixer is the
splitmix64 finalizer applied twice.
"""
import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 2.0 ** -53


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def seed_word(seed):
    """Fold an arbitrary Python int into a 64-bit key."""
    return np.uint64(int(seed) & _MASK64)


def derive_seed(seed, *path):
    """Child seed for a sub-component (e.g. left/right or inner/outer stage)."""
    with np.errstate(over="ignore"):
        z = np.array([seed_word(seed)], dtype=np.uint64)
        for p in path:
            z = _mix(z + _GOLDEN * np.uint64(int(p) + 1))
    return int(z[0])


def bits(seed, cols, stream):
    """64 random bits for every entry of ``cols`` (broadcast against ``stream``)."""
    cols = np.asarray(cols, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.array(seed_word(seed), dtype=np.uint64) + _GOLDEN)
        z = key + cols * _GOLDEN + (stream + np.uint64(1)) * _STREAM
        return _mix(_mix(z))


def uniform(seed, cols, stream):
    """Uniform floats in [0, 1) with 53 random bits."""
    return (bits(seed, cols, stream) >> np.uint64(11)).astype(np.float64) * _TWO_NEG53


def signs(seed, cols, stream):
    """Rademacher +-1.0 from the top bit."""
    b = bits(seed, cols, stream) >> np.uint64(63)
    return 1.0 - 2.0 * b.astype(np.float64)


def integers(seed, cols, stream, high):
    """Integers in [0, high). Modulo bias is at most high / 2**64."""
    return (bits(seed, cols, stream) % np.uint64(high)).astype(np.int64)


def normals(seed, cols, stream):
    """Standard normals via Box-Muller; consumes streams 2*stream and 2*stream+1."""
    stream = np.asarray(stream, dtype=np.uint64)
    u1 = (bits(seed, cols, 2 * stream) >> np.uint64(11)).astype(np.float64)
    u1 = (u1 + 1.0) * _TWO_NEG53  # (0, 1]
    u2 = uniform(seed, cols, 2 * stream + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
