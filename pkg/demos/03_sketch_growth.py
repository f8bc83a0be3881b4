"""Growing a sketch and keeping S K up to date.

When an active learner labels n_s new points, the sketch gains columns
(and possibly rows). Each block of a sketch is drawn from its own keyed
random stream, so a grown sketch can be regenerated bit-for-bit from its
recipe, and the product S K can be updated from the cached product at a
cost linear in the number of old points.
"""
import numpy as np

from sketchvar import KernelSpec, extend, generate_sketch, incremental_sk
from sketchvar.active_learning import FlopCounter
from sketchvar.kernels import kernel_block
from sketchvar.sketch import regenerate

rng = np.random.default_rng(0)
x = rng.uniform(size=430)
n0, ns = 400, 30
G = kernel_block(KernelSpec.gaussian(0.25), x, x)

S = generate_sketch("gaussian", seed=11, m=6, n=n0)
cache = S.entries @ G[:n0, :n0]

T = extend(S, 6, n0 + ns, seed=12)
E = T.entries
counter = FlopCounter()
updated = incremental_sk(cache, E[:, :n0], (G[:n0, n0:], G[n0:, :n0], G[n0:, n0:]),
                         (E[:, n0:], E[6:, :n0], E[6:, n0:]), counter=counter)

print("max |incremental - full| =", np.abs(updated - E @ G).max())
print(f"flops for the update: {counter.total:,} vs {6 * (n0 + ns) ** 2:,} for a full product")
print("regenerated from recipe is identical:", np.array_equal(regenerate("gaussian", T.steps).entries, E))
