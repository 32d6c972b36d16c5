import math

import numpy as np
import pytest

from residual_sketch import (
    ExactLpBackend,
    IncompatibleStates,
    InvalidInput,
    InvalidSpec,
    ResidualPipeline,
    UnsupportedP,
    VectorCountSketch,
    bucket_count,
    row_count,
)
from residual_sketch import testkit as tk
from residual_sketch.vector import (
    cs_update,
    point_estimate,
    residual_estimate,
    select_top_k,
    sparse_recover,
    top_k_candidates,
)

# |xhat_j - x_j| <= eps * ||x_{-k}||_p / (C1 * k**(1/p)) for j in J; frozen
# from a 100-trial pilot whose worst ratio was 1/27.5 at p=3.
C1 = 20.0


def sketch_of(x, buckets, rows, seed):
    cs = VectorCountSketch(x.size, buckets, rows, seed)
    nz = np.flatnonzero(x)
    cs.update_batch(nz, x[nz])
    return cs


def test_bucket_count_formula():
    assert bucket_count(2**20, 16, 4, 0.5, 1.0) == 26008
    assert bucket_count(2**20, 16, 4, 0.5, 1.0) == math.ceil(2 ** (8 / 3) * 4 * 1024)


@pytest.mark.parametrize("p,eps", [(3, 0.5), (4, 0.1), (2.5, 0.9)])
def test_bucket_count_clamps_to_n(p, eps):
    assert bucket_count(50, 50, p, eps) == 50


def test_bucket_count_eps_one():
    assert bucket_count(10**6, 1, 3, 1.0) == 100


def test_bucket_count_scales_with_cb():
    assert bucket_count(10**6, 1, 3, 1.0, c_b=2.5) == 250


@pytest.mark.parametrize("p", [2, 1.5, 0.5])
def test_bucket_count_needs_p_above_two(p):
    with pytest.raises(UnsupportedP):
        bucket_count(100, 2, p, 0.5)
    with pytest.raises(UnsupportedP):
        ResidualPipeline(100, 2, p, 0.5)


@pytest.mark.parametrize("args", [(100, 0, 3, 0.5), (100, 101, 3, 0.5), (100, 2, 3, 0.0),
                                  (100, 2, 3, 1.5)])
def test_bucket_count_rejects_bad_args(args):
    with pytest.raises(InvalidSpec):
        bucket_count(*args)


def test_row_count():
    assert row_count(10**4) == 40
    assert row_count(1024, 1.0) == 10
    assert row_count(1) == 1


def test_zero_update_is_noop():
    cs = VectorCountSketch(100, 10, 5, seed=1)
    cs_update(cs, 4, 0.0)
    assert not cs.table.any()


def test_single_update_lands_in_each_row():
    cs = VectorCountSketch(100, 10, 5, seed=1)
    cs_update(cs, 42, 5.0)
    for j in range(5):
        assert cs.table[j, cs.bucket_of[j, 42]] == 5.0 * cs.sign_of[j, 42]
    assert np.count_nonzero(cs.table) == 5


def test_buckets_match_recomputation():
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 300, size=1000)
    vals = rng.integers(-20, 21, size=1000).astype(float)
    cs = VectorCountSketch(300, 17, 6, seed=2)
    for i, v in zip(idx, vals):
        cs_update(cs, int(i), float(v))
    x = np.zeros(300)
    np.add.at(x, idx, vals)
    for j in range(cs.rows):
        want = np.zeros(17)
        np.add.at(want, cs.bucket_of[j], cs.sign_of[j] * x)
        assert np.array_equal(cs.table[j], want)


def test_batch_equals_scalar_updates():
    rng = np.random.default_rng(1)
    idx = rng.integers(0, 50, size=400)
    vals = rng.integers(-5, 6, size=400).astype(float)
    a, b = VectorCountSketch(50, 7, 4, 3), VectorCountSketch(50, 7, 4, 3)
    a.update_batch(idx, vals)
    for i, v in zip(idx, vals):
        b.update(int(i), float(v))
    assert np.array_equal(a.table, b.table)
    c = VectorCountSketch(50, 7, 4, 3)
    c.update_batch(idx[:30], vals[:30])  # shorter than n: the unfolded path
    c.update_batch(idx[30:], vals[30:])
    assert np.array_equal(a.table, c.table)


def test_update_errors():
    cs = VectorCountSketch(10, 3, 2)
    with pytest.raises(InvalidInput):
        cs.update(10, 1.0)
    with pytest.raises(InvalidInput):
        cs.update(0, float("inf"))
    with pytest.raises(InvalidInput):
        cs.update_batch([0, 1], [1.0])
    with pytest.raises(InvalidSpec):
        VectorCountSketch(10, 0, 2)


def test_point_estimate_single_spike():
    x = np.zeros(1000)
    x[7] = 5.0
    cs = sketch_of(x, 50, 9, seed=3)
    assert point_estimate(cs, 7) == 5.0


def test_point_estimate_zero_vector():
    cs = VectorCountSketch(200, 20, 7)
    assert not cs.point_estimates().any()


def test_even_row_median_is_midpoint():
    cs = VectorCountSketch(30, 4, 4, seed=5)
    cs.update(3, 2.0)
    cs.update(11, 1.0)
    rows = cs.row_estimates([3])[:, 0]
    assert point_estimate(cs, 3) == 0.5 * (np.sort(rows)[1] + np.sort(rows)[2])


def test_tail_error_bound():
    # dense heavy-tailed x; buckets sized so the tail error is 5% of the k-th entry
    n, k, ok = 5000, 10, 0
    for t in range(100):
        rng = np.random.default_rng(t)
        x = rng.standard_normal(n)
        x[rng.choice(n, k, replace=False)] = 50.0
        tail = math.sqrt(tk.exact_vector_residual(x, k, 2))
        b = math.ceil((tail / (0.05 * 50.0)) ** 2)
        cs = sketch_of(x, b, row_count(n), seed=10_000 + t)
        ok += np.max(np.abs(cs.point_estimates() - x)) <= tail / math.sqrt(b)
    assert ok >= 85


def test_top_k_separated():
    x = np.zeros(2000)
    heavy = np.array([5, 77, 300, 1999])
    x[heavy] = 100.0
    cs = sketch_of(x, 200, 11, seed=4)
    J = top_k_candidates(cs, 4)
    assert sorted(J.indices.tolist()) == heavy.tolist()
    assert np.array_equal(J.values, np.full(4, 100.0))


def test_top_k_all():
    x = np.random.default_rng(5).standard_normal(40)
    cs = sketch_of(x, 8, 5, seed=1)
    J = top_k_candidates(cs, 40)
    assert sorted(J.indices.tolist()) == list(range(40))
    with pytest.raises(InvalidInput):
        cs.top_k(41)


def test_top_k_sorted_with_low_index_ties():
    est = np.array([1.0, -3.0, 3.0, 0.5, -3.0, 2.0])
    assert select_top_k(est, 4).tolist() == [1, 2, 4, 5]
    assert select_top_k(est, 0).tolist() == []


def test_top_k_candidate_type():
    x = np.zeros(100)
    x[[3, 9]] = [4.0, -8.0]
    J = top_k_candidates(sketch_of(x, 30, 7, seed=2), 2)
    assert J.pairs() == [(9, -8.0), (3, 4.0)]
    assert len(J) == 2
    assert J.to_dense(100)[9] == -8.0


def test_displacement_on_zipf():
    n, k, p, eps, C = 10**4, 10, 3.0, 0.5, 1.0
    for t in range(20):
        st = tk.gen_zipf_stream(tk.ZipfStreamSpec(n, 1.1, 1, 50_000, 0.0, seed=t))
        pipe = ResidualPipeline(n, k, p, eps, seed=700 + t)
        pipe.update_batch(st.idx, st.vals)
        J = pipe.candidates()
        I = np.lexsort((np.arange(n), -np.abs(st.x)))[:k]
        S_I, S_J = tk.top_k_mass(st.x, I, p), tk.top_k_mass(st.x, J.indices, p)
        assert S_J <= S_I
        assert S_I - S_J <= C * eps ** (1 - 1 / p) * tk.exact_vector_residual(st.x, k, p)


def test_residual_of_k_sparse_vector():
    x = np.zeros(5000)
    x[[10, 2000, 4999]] = [50.0, -70.0, 90.0]
    pipe = ResidualPipeline(5000, 3, 3.0, 0.5, seed=1)
    nz = np.flatnonzero(x)
    pipe.update_batch(nz, x[nz])
    assert residual_estimate(pipe) == pytest.approx(0.0, abs=1e-9)


def test_residual_of_zero_stream():
    pipe = ResidualPipeline(1000, 5, 4.0, 0.5)
    assert residual_estimate(pipe) == 0.0


def test_residual_estimate_is_repeatable():
    st = tk.gen_zipf_stream(tk.ZipfStreamSpec(3000, 1.1, 1, 20_000, 0.2, seed=3))
    pipe = ResidualPipeline(3000, 5, 3.0, 0.5, seed=9)
    pipe.update_batch(st.idx, st.vals)
    first = pipe.residual_estimate()
    assert pipe.residual_estimate() == first
    assert pipe.lp.finalize(3.0) == pytest.approx(np.sum(np.abs(st.x) ** 3))


def test_sparse_recover_separated():
    x = np.zeros(3000)
    support = [4, 1500, 2222]
    x[support] = [30.0, -45.0, 60.0]
    rng = np.random.default_rng(2)
    noise = rng.choice(3000, 40, replace=False)
    x[noise] += rng.integers(-1, 2, size=40)
    pipe = ResidualPipeline(3000, 3, 3.0, 0.5, seed=3)
    nz = np.flatnonzero(x)
    pipe.update_batch(nz, x[nz])
    rec = sparse_recover(pipe)
    assert sorted(rec.indices.tolist()) == support
    tail = tk.exact_vector_residual(x, 3, 2)
    b = pipe.cs.buckets
    assert np.all(np.abs(rec.values - x[rec.indices]) <= math.sqrt(tail / b) + 1e-12)


def test_sparse_recover_k_zero():
    x = np.random.default_rng(0).integers(-3, 4, size=500).astype(float)
    pipe = ResidualPipeline(500, 0, 3.0, 0.5, seed=1)
    pipe.update_batch(np.arange(500), x)
    assert len(sparse_recover(pipe)) == 0
    assert residual_estimate(pipe) == pytest.approx(np.sum(np.abs(x) ** 3))


def test_candidate_accuracy_with_calibrated_c1():
    n, k, eps = 10**4, 10, 0.5
    for p in (3.0, 4.0):
        ok = 0
        for t in range(40):
            st = tk.gen_zipf_stream(tk.ZipfStreamSpec(n, 1.1, 1, 100_000, 0.0, seed=t))
            pipe = ResidualPipeline(n, k, p, eps, seed=5000 + t)
            pipe.update_batch(st.idx, st.vals)
            J = pipe.candidates()
            bound = eps * tk.exact_vector_residual(st.x, k, p) ** (1 / p) / (C1 * k ** (1 / p))
            ok += np.max(np.abs(J.values - st.x[J.indices])) <= bound
        assert ok >= 34


def _integer_stream(seed, n=800, size=3000):
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=size), rng.integers(-50, 51, size=size).astype(float)


def test_order_invariance_exact():
    idx, vals = _integer_stream(0)
    a = ResidualPipeline(800, 5, 3.0, 0.5, seed=4)
    a.update_batch(idx, vals)
    perm = np.random.default_rng(1).permutation(idx.size)
    b = ResidualPipeline(800, 5, 3.0, 0.5, seed=4)
    for i, v in zip(idx[perm], vals[perm]):
        b.update(int(i), float(v))
    assert np.array_equal(a.cs.table, b.cs.table)
    assert np.array_equal(a.candidates().indices, b.candidates().indices)


def test_turnstile_restores_table():
    cs = VectorCountSketch(100, 9, 5, seed=2)
    cs.update(3, 4.0)
    before = cs.table.copy()
    cs.update(17, 11.0)
    cs.update(17, -11.0)
    assert np.array_equal(cs.table, before)


def test_sign_covariance():
    idx, vals = _integer_stream(3)
    a, b = VectorCountSketch(800, 31, 12, 6), VectorCountSketch(800, 31, 12, 6)
    a.update_batch(idx, vals)
    b.update_batch(idx, -vals)
    assert np.array_equal(b.point_estimates(), -a.point_estimates())


def test_merge_pipelines():
    idx, vals = _integer_stream(5)
    whole = ResidualPipeline(800, 5, 4.0, 0.5, seed=8)
    whole.update_batch(idx, vals)
    x = ResidualPipeline(800, 5, 4.0, 0.5, seed=8)
    y = ResidualPipeline(800, 5, 4.0, 0.5, seed=8)
    x.update_batch(idx[:1000], vals[:1000])
    y.update_batch(idx[1000:], vals[1000:])
    m = x.merge(y)
    assert np.array_equal(m.cs.table, whole.cs.table)
    assert m.residual_estimate() == whole.residual_estimate()
    with pytest.raises(IncompatibleStates):
        x.cs.merge(VectorCountSketch(800, x.cs.buckets, x.cs.rows, seed=9))


def test_custom_backend_is_used():
    class Counting(ExactLpBackend):
        calls = 0

        def finalize(self, p):
            Counting.calls += 1
            return super().finalize(p)

    pipe = ResidualPipeline(100, 2, 3.0, 0.5, backend=Counting(100))
    pipe.update(4, 3.0)
    pipe.residual_estimate()
    assert Counting.calls == 1
    with pytest.raises(InvalidSpec):
        ResidualPipeline(100, 2, 3.0, 0.5, backend=ExactLpBackend(99))
