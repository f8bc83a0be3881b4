"""How the worst-case gap sup_x |V1 - V2| shrinks with n.

A small version of the gap-n sweep: five sample sizes, five seeds, with m
and lambda following the exponential-decay rules. The last column rescales
the gap by n*lambda, which should stay bounded; with five seeds the curve
is noisy but stays well below its n=50 value.
"""
from sketchvar.experiments import default_grid, gap_sweep_n, lam_rule, m_rule, summarize
from sketchvar.kernels import KernelSpec

n_list = [50, 100, 200, 400, 800]
reports = gap_sweep_n(KernelSpec.gaussian(0.5), n_list, lambda n: m_rule("exp", n), lambda n: lam_rule("exp", n),
                      sigma=1.0, grid=default_grid(100), seeds=range(5))
print(f"{'n':>5} {'m':>3} {'mean sup gap':>14} {'+/-':>10} {'gap * n lam':>12}")
for n, mean, hw in summarize(reports, "n"):
    m = m_rule("exp", n)
    print(f"{n:5d} {m:3d} {mean:14.3e} {hw:10.1e} {mean * n * lam_rule('exp', n):12.3e}")
