"""
Tail of a heavy-tailed stream, and its top-k
=============================================

A turnstile stream over 10^4 coordinates whose counts follow a Zipf law.
The pipeline keeps a CountSketch plus an l_p accumulator and, at the end,
reports ||x - x_k||_p^p together with the k coordinates it would keep.
"""
import numpy as np

from residual_sketch import ResidualPipeline
from residual_sketch import testkit

n, k, p, eps = 10_000, 10, 3.0, 0.5
stream = testkit.gen_zipf_stream(testkit.ZipfStreamSpec(n, exponent=1.1, updates=100_000,
                                                        turnstile=0.1, seed=4))
pipe = ResidualPipeline(n, k, p, eps, seed=0)
print(pipe)

# updates can arrive one at a time or in batches
for i, v in list(stream)[:1000]:
    pipe.update(i, v)
pipe.update_batch(stream.idx[1000:], stream.vals[1000:])

exact = testkit.exact_vector_residual(stream.x, k, p)
est = pipe.residual_estimate()
print(f"||x - x_k||_p^p: estimate {est:.4g}, exact {exact:.4g}, ratio {est / exact:.4f}")

J = pipe.sparse_recover()
truth = np.lexsort((np.arange(n), -np.abs(stream.x)))[:k]
print("recovered:", J.pairs()[:5], "...")
print("true top-k found:", len(set(J.indices.tolist()) & set(truth.tolist())), "of", k)
