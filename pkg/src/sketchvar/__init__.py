"""Sketched predictive variance for kernel ridge regression.

Submodules:

* :mod:`sketchvar.kernels` kernels, kernel matrices and spectral splits
* :mod:`sketchvar.sketch` random projection matrices and the sketch assumption check
* :mod:`sketchvar.exact_krr` exact KRR fit, mean and variance V1
* :mod:`sketchvar.sketched_krr` sketched variance V2, plug-in V3, sketched mean
* :mod:`sketchvar.active_learning` variance-driven active learning
* :mod:`sketchvar.experiments` data generators, parameter rules and sweeps
* :mod:`sketchvar.cli` the ``sketchvar`` command
"""
from .active_learning import ActiveLearningConfig, ActiveLearner, incremental_sk, run_active_learning
from .exact_krr import ExactFit, estimate_sigma, fit, predict_mean, variance_v1, woodbury_rhs
from .kernels import (
    Dataset,
    KernelSpec,
    SpectralDecomposition,
    build_kernel_matrix,
    decompose,
    effective_dimension,
    kernel_sections,
)
from .sketch import SketchMatrix, check_assumption, extend, load_sketch, save_sketch
from .sketch import generate as generate_sketch
from .sketched_krr import (
    SketchedFit,
    gap_diagnostics,
    sketched_fit,
    sketched_predict_mean,
    variance_v2,
    variance_v3,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningConfig", "ActiveLearner", "incremental_sk", "run_active_learning",
    "ExactFit", "estimate_sigma", "fit", "predict_mean", "variance_v1", "woodbury_rhs",
    "Dataset", "KernelSpec", "SpectralDecomposition", "build_kernel_matrix", "decompose",
    "effective_dimension", "kernel_sections",
    "SketchMatrix", "check_assumption", "extend", "load_sketch", "save_sketch", "generate_sketch",
    "SketchedFit", "gap_diagnostics", "sketched_fit", "sketched_predict_mean", "variance_v2", "variance_v3",
]
