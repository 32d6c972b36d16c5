"""Compiled inner loops. ``scatter_outer`` is None when numba is missing,
and callers fall back to vectorized numpy."""
try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _scatter_outer(acc, rows, cols, vals, lrows, lvals, rrows, rvals):
    # acc[lrows[i], rrows[j]] += v * outer(lvals[i], rvals[j]) for each (i, j, v)
    wl = lrows.shape[1]
    wr = rrows.shape[1]
    for t in range(rows.shape[0]):
        i = rows[t]
        j = cols[t]
        v = vals[t]
        for a in range(wl):
            r = lrows[i, a]
            va = v * lvals[i, a]
            for b in range(wr):
                acc[r, rrows[j, b]] += va * rvals[j, b]


scatter_outer = njit(cache=True, nogil=True)(_scatter_outer) if njit else None
