"""Variance-weighted active learning on clustered data.

Most pool points sit in a tight cluster around x = 1; a few are spread
over [0, 1/2]. Weighting acquisition by the sketched variance V2 pulls in
points from the sparse region, where the model is most uncertain. We run
a few seeds of both strategies and print the final test MSE.
"""
import numpy as np

from sketchvar import ActiveLearningConfig, run_active_learning
from sketchvar.experiments import SyntheticSpec, generate

finals = {"v2": [], "uniform": []}
for seed in range(5):
    pool = generate(SyntheticSpec("clustered", 2000, 1.0, seed))
    test = generate(SyntheticSpec("clustered", 1000, 1.0, seed + 10_000))
    for mode in finals:
        cfg = ActiveLearningConfig(iterations=20, acquisition=mode, seed=seed)
        history = run_active_learning(pool, test, cfg)
        finals[mode].append(history[-1].test_mse)
        if seed == 0:
            print(mode, "MSE by iteration:", " ".join(f"{h.test_mse:.3f}" for h in history[::5]))

for mode, values in finals.items():
    print(f"{mode:>8}: mean final test MSE {np.mean(values):.4f}")
