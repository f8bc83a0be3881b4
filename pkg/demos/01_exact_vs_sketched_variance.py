"""Exact and sketched predictive variance on one dataset.

We fit kernel ridge regression on 400 noisy samples of -1 + 2x^2, then
compare the exact predictive variance V1 with the sketched variance V2 at
a handful of query points. The sketch has only a handful of rows, yet V2 tracks
V1 closely: the gap is orders of magnitude smaller than V1 itself.
"""
import numpy as np

from sketchvar import KernelSpec, build_kernel_matrix, fit, generate_sketch, kernel_sections
from sketchvar import sketched_fit, variance_v1, variance_v2
from sketchvar.experiments import SyntheticSpec, generate, lam_rule, m_rule

n = 400
data = generate(SyntheticSpec("uniform_quadratic", n, sigma=1.0, seed=0))
kernel = KernelSpec.gaussian(0.5)
K = build_kernel_matrix(kernel, data)  # carries the 1/n factor
lam = lam_rule("exp", n)
m = m_rule("exp", n)

queries = np.linspace(0.0, 1.0, 6)
ks = kernel_sections(kernel, data.inputs, queries)  # unscaled k(x)

v1 = variance_v1(fit(K, data.responses, lam), ks, sigma=1.0)
v2 = variance_v2(sketched_fit(K, generate_sketch("gaussian", 1, m, n), lam), ks, sigma=1.0)

print(f"n={n}, lambda={lam:.4g}, m={m}")
print(f"{'x':>6} {'V1':>12} {'V2':>12} {'|V1-V2|':>12}")
for x, a, b in zip(queries, v1, v2):
    print(f"{x:6.2f} {a:12.4e} {b:12.4e} {abs(a - b):12.2e}")
print("Reference scale sigma^2/(n lambda) =", f"{1.0 / (n * lam):.3e}")
