"""
Estimating a low-rank residual from a small sketch
==================================================

A 400 x 300 matrix with a rank-5 signal buried in noise. We never
decompose it: a 50 x 50 bilinear sketch is enough to estimate how much
mass lies outside the best rank-5 approximation.
"""
import numpy as np

from residual_sketch import batch_estimate, make_state, rank_k_residual
from residual_sketch import testkit

A = testkit.low_rank_plus_noise(400, 300, rank=5, seed=0)
k = 5

# ground truth, from a full SVD of A
exact = rank_k_residual(A, k)
print(f"||A - A_k||_F          = {exact:.2f}")

# one estimate per sketch family, all with m = 50 rows on each side
for family in ("countsketch", "osnap", "jl", "gaussian", "composed"):
    st = make_state(family, 50, A.shape, seed=1)
    res = batch_estimate(A, k, st.left, st.right)
    print(f"{family:>12}: estimate {res.estimate:8.2f}   rel. error {res.estimate / exact - 1:+.3f}")

# the sketch is linear, so a stream of +/- updates works too:
# add A one entry at a time, then take half of it back out
st = make_state("osnap", 50, A.shape, seed=2)
rows, cols = np.nonzero(A)
for i, j in zip(rows[:5000], cols[:5000]):
    st.update(i, j, A[i, j])
st.update_batch(rows[5000:], cols[5000:], A[rows[5000:], cols[5000:]])
st.update_matrix(-0.5 * A)
print(f"\nstreamed, then halved:  {st.estimate_residual(k):.2f}  (exact {0.5 * exact:.2f})")

# two shards with the same seeds merge into the sketch of the sum
left, right = make_state("osnap", 50, A.shape, seed=3), make_state("osnap", 50, A.shape, seed=3)
top, bottom = A.copy(), A.copy()
top[200:], bottom[:200] = 0, 0
left.update_matrix(top)
right.update_matrix(bottom)
print(f"merged shards:          {left.merge(right).estimate_residual(k):.2f}")
