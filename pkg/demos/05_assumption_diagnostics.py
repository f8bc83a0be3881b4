"""Checking the sketch assumption on a Sobolev kernel.

For a sketch to be useful its action on the leading eigenvectors U1 must
be close to an isometry (singular values of S U1 in [1/2, 3/2]), and its
action on the weighted tail must be small. We count how often a Gaussian
sketch with m = f * s_lambda rows satisfies both, for several factors f.
"""
from sketchvar import KernelSpec, build_kernel_matrix, check_assumption, decompose, generate_sketch
from sketchvar.experiments import SyntheticSpec, generate

n = 300
lam = n ** -0.8
specs = []
for seed in range(50):
    data = generate(SyntheticSpec("uniform_quadratic", n, 1.0, seed))
    specs.append(decompose(build_kernel_matrix(KernelSpec.sobolev_cubic(), data), lam))
print("effective dimension s_lambda =", specs[0].split)
for factor in (2, 4, 8, 16):
    ok = sum(check_assumption(generate_sketch("gaussian", 100 + i, factor * sp.split, n), sp, lam).passed
             for i, sp in enumerate(specs))
    print(f"m = {factor:2d} * s_lambda: assumption holds in {ok}/50 draws")
