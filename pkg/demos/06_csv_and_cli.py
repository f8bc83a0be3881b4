"""Loading a CSV dataset and driving the command line.

Writes a small CSV, loads it with standardization, fits a sketched model,
then runs the `v2-point` subcommand in-process on a toy configuration.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from sketchvar import KernelSpec, build_kernel_matrix, generate_sketch, sketched_fit, sketched_predict_mean
from sketchvar.cli import run
from sketchvar.experiments import load_csv_dataset
from sketchvar.kernels import kernel_sections

tmp = Path(tempfile.mkdtemp())
rng = np.random.default_rng(0)
x = rng.uniform(0, 10, 300)
rows = "\n".join(f"{a:.6f},{-1 + 2 * (a / 10) ** 2 + 0.1 * rng.standard_normal():.6f}" for a in x)
(tmp / "data.csv").write_text("x,y\n" + rows + "\n")

data, stats = load_csv_dataset(tmp / "data.csv", "y", standardize=True)
kernel = KernelSpec.gaussian(0.5)
K = build_kernel_matrix(kernel, data)
sf = sketched_fit(K, generate_sketch("gaussian", 0, 8, data.n), 1e-3)
grid = stats.apply(np.array([[2.0], [5.0], [8.0]]))
print("sketched mean at x=2,5,8:", sketched_predict_mean(sf, None, data.responses, kernel_sections(kernel, data.inputs, grid)))

(tmp / "toy.json").write_text(json.dumps({"K": [[1]], "k_x": [1], "lambda": 1, "sigma": 1, "sketch": "identity"}))
code = run(["v2-point", "--config", str(tmp / "toy.json"), "--out", str(tmp / "run")])
print("exit code", code, "| files:", sorted(p.name for p in (tmp / "run").iterdir()))
