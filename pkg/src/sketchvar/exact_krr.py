"""Exact kernel ridge regression and its predictive variance.

All solves go through a Cholesky factor of ``K + lam I``; no explicit
inverse is ever formed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .kernels import Dataset, KernelSpec, kernel_sections

__all__ = [
    "ExactFit",
    "FactorizationError",
    "DegradedSolveWarning",
    "fit",
    "predict_mean",
    "variance_v1",
    "woodbury_rhs",
    "estimate_sigma",
]


class FactorizationError(np.linalg.LinAlgError):
    """``K + lam I`` could not be Cholesky-factored."""


class DegradedSolveWarning(RuntimeWarning):
    """A pseudo-inverse replaced a singular solve."""


def _check_lam(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be positive and finite, got {lam}")


def _as_square(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    return K


def _sections(k_x, n: int) -> tuple[np.ndarray, bool]:
    k = np.asarray(k_x, dtype=float)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    if k.shape[1] != n:
        raise ValueError(f"kernel section has length {k.shape[1]}, expected {n}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel sections must be finite")
    return k, single


def _out(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


@dataclass(frozen=True, eq=False)
class ExactFit:
    """Weights ``omega = (K + lam I)^{-1} y / n`` with the Cholesky factor kept.

    ``kernel`` and ``inputs`` are optional; when present, :meth:`sections`
    evaluates ``k(x)`` for new query points.
    """

    K: np.ndarray
    weights: np.ndarray
    lam: float
    chol: tuple
    kernel: KernelSpec | None = None
    inputs: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def sections(self, x) -> np.ndarray:
        if self.kernel is None or self.inputs is None:
            raise ValueError("fit was built without kernel/inputs; pass k(x) directly")
        return kernel_sections(self.kernel, self.inputs, x)

    def solve(self, b) -> np.ndarray:
        """``(K + lam I)^{-1} b``."""
        return la.cho_solve(self.chol, b, check_finite=False)

    def train_predictions(self) -> np.ndarray:
        return self.n * (self.K @ self.weights)


def fit(K, y, lam: float, *, kernel: KernelSpec | None = None, inputs=None) -> ExactFit:
    K = _as_square(K)
    y = np.asarray(y, dtype=float).ravel()
    _check_lam(lam)
    n = K.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"y has {y.shape[0]} entries, kernel matrix is {n}x{n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("responses must be finite")
    try:
        chol = la.cho_factor(K + lam * np.eye(n), lower=True, check_finite=True)
    except la.LinAlgError as exc:
        raise FactorizationError(f"K + lam I is not numerically positive definite (lam={lam:g})") from exc
    weights = la.cho_solve(chol, y, check_finite=False) / n
    if inputs is not None:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
    return ExactFit(K, weights, float(lam), chol, kernel, inputs)


def fit_dataset(kernel: KernelSpec, data: Dataset, lam: float, K=None) -> ExactFit:
    from .kernels import build_kernel_matrix

    if K is None:
        K = build_kernel_matrix(kernel, data)
    return fit(K, data.responses, lam, kernel=kernel, inputs=data.inputs)


def predict_mean(fit: ExactFit, k_x):
    """``k(x)^T omega``; ``k_x`` is one section or a (q, n) stack of them."""
    k, single = _sections(k_x, fit.n)
    return _out(k @ fit.weights, single)


def variance_v1(fit: ExactFit, k_x, sigma: float):
    """Exact predictive variance ``sigma^2 / n^2 * ||(K + lam I)^{-1} k(x)||^2``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    k, single = _sections(k_x, fit.n)
    r = fit.solve(k.T)
    base = np.einsum("ij,ij->j", r, r) / fit.n**2
    return _out(sigma**2 * base, single)


def woodbury_rhs(K, lam: float, *, return_degraded: bool = False, cond_limit: float = 1e13):
    """``(1/lam) (I - K (lam K + K^2)^{-1} K)``, which equals ``(K + lam I)^{-1}``.

    When ``lam K + K^2`` is singular to working precision the inner solve
    falls back to a pseudo-inverse and a :class:`DegradedSolveWarning` is
    issued; ``return_degraded=True`` also returns the flag.
    """
    K = _as_square(K)
    _check_lam(lam)
    n = K.shape[0]
    B = lam * K + K @ K
    B = 0.5 * (B + B.T)
    degraded = False
    try:
        c = la.cho_factor(B, lower=True)
        diag = np.abs(np.diag(c[0]))
        if diag.min() == 0 or (diag.max() / diag.min()) ** 2 > cond_limit:
            raise la.LinAlgError("ill-conditioned")
        inner = K @ la.cho_solve(c, K)
    except la.LinAlgError:
        degraded = True
        warnings.warn("lam*K + K^2 is singular; using a pseudo-inverse", DegradedSolveWarning, stacklevel=2)
        # pseudo-inverse of lam K + K^2 taken in the eigenbasis of K, where
        # it is diag(1 / (lam mu + mu^2)) on the numerically nonzero mu
        mu, U = la.eigh(0.5 * (K + K.T))
        keep = mu > n * np.finfo(float).eps * max(mu.max(), 0.0)
        scale = np.zeros_like(mu)
        scale[keep] = mu[keep] ** 2 / (lam * mu[keep] + mu[keep] ** 2)
        inner = (U * scale) @ U.T
    W = (np.eye(n) - 0.5 * (inner + inner.T)) / lam
    return (W, degraded) if return_degraded else W


def estimate_sigma(fit: ExactFit, data: Dataset | np.ndarray) -> float:
    """Residual estimate of the noise variance ``sigma^2``.

    Returns ``||y - yhat||^2 / (n - tr H)`` with the smoother
    ``H = K (K + lam I)^{-1}``. Take the square root for ``sigma`` itself.
    """
    y = data.responses if isinstance(data, Dataset) else np.asarray(data, dtype=float).ravel()
    if y.shape[0] != fit.n:
        raise ValueError("data does not match the fit")
    trace_h = float(np.trace(fit.solve(fit.K)))
    dof = fit.n - trace_h
    if not dof > 0:
        raise ValueError(f"non-positive residual degrees of freedom ({dof:g})")
    resid = y - fit.train_predictions()
    return float(resid @ resid / dof)
