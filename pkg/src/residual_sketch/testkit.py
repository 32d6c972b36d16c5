"""Ground-truth oracles and instance generators.

Nothing here is used by the estimators themselves. The matrix oracle runs
its own one-sided Jacobi SVD so that it shares no code path with
``linalg`` (which calls LAPACK).
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput, InvalidSpec, NumericalFailure
from .vector import _ceil

JACOBI_MAX_DIM = 128


def _round_robin(n):
    """Rounds of disjoint pairs covering every pair of ``range(n)`` once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        rounds.append((np.array(players[:half]), np.array(players[half:][::-1])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_svd(A, compute_v=True, tol=None, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD with parallel round-robin ordering.

    Returns ``(s, V)`` where ``s`` holds the singular values in
    nonincreasing order and ``V`` the matching right singular vectors of
    the tall orientation of ``A`` (of ``A.T`` when ``A`` is wide), or None
    when ``compute_v`` is false.
    """
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix contains NaN or Inf")
    G = A if A.shape[0] >= A.shape[1] else A.T
    G = np.array(G, dtype=np.float64, order="F")
    ncol = G.shape[1]
    if ncol == 0:
        return np.zeros(0), (np.zeros((0, 0)) if compute_v else None)
    if ncol % 2:
        G = np.hstack([G, np.zeros((G.shape[0], 1))])
    n = G.shape[1]
    V = np.eye(n)
    tol = n * np.finfo(float).eps if tol is None else tol
    rounds = _round_robin(n) if n > 1 else []
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            Gp, Gq = G[:, p], G[:, q]
            alpha = np.einsum("ij,ij->j", Gp, Gp)
            beta = np.einsum("ij,ij->j", Gq, Gq)
            gamma = np.einsum("ij,ij->j", Gp, Gq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t = np.where(zeta == 0, 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            G[:, p], G[:, q] = c * Gp - s * Gq, s * Gp + c * Gq
            if compute_v:
                Vp, Vq = V[:, p], V[:, q]
                V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
        if not rotated:
            break
    else:
        raise NumericalFailure("Jacobi SVD did not converge")
    sv = np.sqrt(np.einsum("ij,ij->j", G, G))
    order = np.argsort(-sv, kind="stable")[:ncol]
    return sv[order], (V[:ncol, order] if compute_v else None)


def jacobi_best_rank_k(A, k):
    """The best rank-k approximation ``A_k`` built from the Jacobi oracle."""
    A = np.asarray(A, dtype=np.float64)
    tall = A.shape[0] >= A.shape[1]
    Gt = A if tall else A.T
    _, V = jacobi_svd(A)
    Vk = V[:, :k]
    Ak = Gt @ Vk @ Vk.T
    return Ak if tall else Ak.T


def exact_matrix_residual(A, k):
    """``||A - A_k||_F`` computed without touching ``linalg``.

    Small matrices go through the Jacobi oracle; when both sides exceed
    ``JACOBI_MAX_DIM`` the spectrum of the smaller Gram matrix is used
    instead, summing its eigenvalues beyond the k-th directly.
    """
    if k < 0:
        raise InvalidInput(f"k must be nonnegative, got {k}")
    if min(A.shape) <= JACOBI_MAX_DIM:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)
        s, _ = jacobi_svd(dense, compute_v=False)
        tail = s[k:]
        return float(np.sqrt(np.dot(tail, tail)))
    if sp.issparse(A):
        A = A.tocsr().astype(np.float64)
        gram = (A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T).toarray()
    else:
        A = np.asarray(A, dtype=np.float64)
        gram = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    if k >= gram.shape[0]:
        return 0.0
    lam = np.linalg.eigvalsh(gram)[::-1]
    return float(math.sqrt(np.sum(np.clip(lam[k:], 0.0, None))))


def exact_vector_residual(x, k, p):
    """``||x - x_k||_p^p``: drop the k largest ``|x_i|`` (ties keep the lower index)."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= k <= x.size:
        raise InvalidInput(f"k must lie in [0, {x.size}], got {k}")
    order = np.lexsort((np.arange(x.size), -np.abs(x)))
    return float(np.sum(np.abs(x[order[k:]]) ** p))


def top_k_mass(x, idx, p):
    """``S_T = sum_{t in T} |x_t|**p``."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(np.abs(x[np.asarray(idx, dtype=np.int64)]) ** p))


def low_rank_plus_noise(n, d, rank, seed, signal=None, noise=1.0):
    """``U diag(signal) V^T + noise * N`` with Haar ``U, V`` and Gaussian ``N``.

    The default signal strengths are spread linearly from 200 down to 100.
    """
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    V, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    s = np.linspace(200.0, 100.0, rank) if signal is None else np.asarray(signal, dtype=float)
    return (U * s) @ V.T + noise * rng.standard_normal((n, d))


def random_sparse_counts(n, d, nnz, seed):
    """``n x d`` CSR matrix with ``nnz`` distinct nonzeros holding positive counts."""
    if nnz > n * d:
        raise InvalidSpec(f"cannot place {nnz} nonzeros in a {n}x{d} matrix")
    rng = np.random.default_rng(seed)
    flat = rng.choice(n * d, size=nnz, replace=False)
    vals = rng.geometric(0.4, size=nnz).astype(np.float64)
    return sp.csr_matrix((vals, (flat // d, flat % d)), shape=(n, d))


@dataclass(frozen=True)
class HardInstanceSpec:
    """One draw from the pair of distributions that fool small sketches.

    ``which`` is ``"D1"`` (``G + c sqrt(eps) B``) or ``"D2"``
    (``G + c sqrt(eps) (B + alpha u v^T)``).
    """

    k: int
    eps: float
    c: float = 10.0
    seed: int = 0
    which: str = "D1"

    @property
    def shape(self):
        return _ceil(self.k / self.eps ** 2), self.k


@dataclass
class HardInstance:
    matrix: np.ndarray
    G: np.ndarray
    B: np.ndarray
    alpha: float
    u: np.ndarray
    v: np.ndarray
    spec: HardInstanceSpec


def gen_hard_pair(spec):
    """Sample from D1 or D2.

    A single Gaussian ``H`` is drawn and split at its k-th singular triplet:
    ``B`` is the top ``k-1`` part and ``(alpha, u, v)`` the last one, which
    is exactly the conditional construction of the two distributions.
    ``G`` is an independent Gaussian of the same shape.
    """
    if spec.which not in ("D1", "D2"):
        raise InvalidSpec(f"which must be 'D1' or 'D2', got {spec.which!r}")
    if spec.k <= 1:
        raise InvalidSpec(f"hard instances need k >= 2, got {spec.k}")
    if not 0 < spec.eps <= 1:
        raise InvalidSpec(f"eps must lie in (0, 1], got {spec.eps}")
    rows, k = spec.shape
    rng = np.random.default_rng(spec.seed)
    H = rng.standard_normal((rows, k))
    G = rng.standard_normal((rows, k))
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    B = (U[:, : k - 1] * s[: k - 1]) @ Vt[: k - 1]
    alpha, u, v = float(s[k - 1]), U[:, k - 1].copy(), Vt[k - 1].copy()
    scale = spec.c * math.sqrt(spec.eps)
    M = G + scale * B
    if spec.which == "D2":
        M = M + scale * alpha * np.outer(u, v)
    return HardInstance(M, G, B, alpha, u, v, spec)


@dataclass(frozen=True)
class ZipfStreamSpec:
    """Turnstile stream whose final vector has Zipf-distributed mass.

    Each of ``updates`` steps picks a coordinate with probability
    proportional to ``rank**-exponent`` (ranks assigned by a random
    permutation), adds an integer weight drawn from ``[1, scale]`` and
    negates it with probability ``turnstile``.
    """

    n: int
    exponent: float = 1.1
    scale: int = 1
    updates: int = 100_000
    turnstile: float = 0.0
    seed: int = 0


@dataclass
class VectorStream:
    idx: np.ndarray
    vals: np.ndarray
    x: np.ndarray
    planted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return len(self.idx)

    def __iter__(self):
        return zip(self.idx.tolist(), self.vals.tolist())


def gen_zipf_stream(spec):
    if spec.n < 1 or spec.updates < 0 or spec.scale < 1:
        raise InvalidSpec(f"bad Zipf stream spec {spec}")
    if not 0 <= spec.turnstile <= 1:
        raise InvalidSpec(f"turnstile fraction must lie in [0, 1], got {spec.turnstile}")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(spec.n)
    pmf = np.arange(1, spec.n + 1, dtype=np.float64) ** -spec.exponent
    pmf /= pmf.sum()
    idx = perm[rng.choice(spec.n, size=spec.updates, p=pmf)].astype(np.int64)
    vals = rng.integers(1, spec.scale + 1, size=spec.updates).astype(np.float64)
    neg = rng.random(spec.updates) < spec.turnstile
    vals[neg] = -vals[neg]
    x = np.zeros(spec.n)
    np.add.at(x, idx, vals)
    return VectorStream(idx, vals, x)


def gen_gap_vector(k, block, s, seed):
    """Concatenation of ``k`` blocks of entries uniform in ``{-1, 0, 1}``.

    Each block independently receives, with probability 1/2, one planted
    entry of magnitude ``s`` (random sign) at a random position. Returns the
    vector and the sorted planted positions.
    """
    if k < 1 or block < 1:
        raise InvalidSpec(f"need k, block >= 1, got {k}, {block}")
    rng = np.random.default_rng(seed)
    x = rng.integers(-1, 2, size=k * block).astype(np.float64)
    planted = []
    for b in range(k):
        if rng.random() < 0.5:
            pos = b * block + int(rng.integers(block))
            x[pos] = s * (1.0 if rng.random() < 0.5 else -1.0)
            planted.append(pos)
    return x, np.array(planted, dtype=np.int64)


def vector_stream(x, seed, churn=0):
    """Shuffled turnstile stream whose updates sum to ``x``.

    Every nonzero coordinate arrives as one update; ``churn`` extra pairs
    ``(i, +w), (i, -w)`` with integer ``w`` are mixed in.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    nz = np.flatnonzero(x)
    idx, vals = [nz], [x[nz]]
    if churn:
        ci = rng.integers(0, x.size, size=churn)
        cw = rng.integers(1, 10, size=churn).astype(np.float64)
        idx += [ci, ci]
        vals += [cw, -cw]
    idx = np.concatenate(idx).astype(np.int64)
    vals = np.concatenate(vals)
    order = rng.permutation(idx.size)
    return VectorStream(idx[order], vals[order], x.copy())


def gen_gap_stream(k, block, s, seed, churn=0):
    x, planted = gen_gap_vector(k, block, s, seed)
    st = vector_stream(x, seed + 1, churn)
    st.planted = planted
    return st
