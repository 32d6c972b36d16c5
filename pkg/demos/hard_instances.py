"""
Two matrix distributions a small sketch cannot tell apart
=========================================================

D1 hides a rank-(k-1) signal in Gaussian noise; D2 adds one more
direction whose strength is a typical k-th singular value, which makes
its entries exactly N(0, 1 + c^2 eps). The rank-(k-1) residual jumps
from noise level to signal level between the two.
"""
import numpy as np

from residual_sketch import batch_estimate, make_state, rank_k_residual
from residual_sketch.testkit import HardInstanceSpec, gen_hard_pair

k, eps = 4, 0.25
for which in ("D1", "D2"):
    inst = gen_hard_pair(HardInstanceSpec(k, eps, seed=7, which=which))
    M = inst.matrix
    s = np.linalg.svd(M, compute_uv=False)
    print(f"{which}: shape {M.shape}, entry variance {M.var():.2f}, "
          f"sigma = {np.round(s, 2)}, alpha = {inst.alpha:.2f}")
    exact = rank_k_residual(M, k - 1)
    st = make_state("osnap", 8, M.shape, seed=1)
    est = batch_estimate(M, k - 1, st.left, st.right).estimate
    print(f"    rank-{k - 1} residual {exact:.2f}, sketched with m=8: {est:.2f}")
