"""Randomly sketched KRR: the sketched variance V2, the plug-in variance V3,
the sketched mean, and the T1/T2 quantities that control ``|V1 - V2|``.

With ``A = S K`` the only m x m matrix needed is

    M = lam S K S^T + S K^2 S^T = lam A S^T + A A^T,

so ``K^2`` is never formed and a fit costs one m x n x n product.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .kernels import SpectralDecomposition
from .sketch import OversketchWarning

__all__ = [
    "SketchedFit",
    "GapDiagnostics",
    "SketchConditioningError",
    "sketched_fit",
    "variance_v2",
    "variance_v3",
    "sketched_predict_mean",
    "gap_diagnostics",
]


_RCOND = 1e-12


class SketchConditioningError(np.linalg.LinAlgError):
    """``M`` is singular or too ill-conditioned to trust."""


def _entries(S) -> np.ndarray:
    return np.asarray(S, dtype=float)


@dataclass(frozen=True, eq=False)
class SketchedFit:
    A: np.ndarray
    S: np.ndarray
    M: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray
    lam: float
    alpha: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def condition(self) -> float:
        return float(self.evals[-1] / self.evals[0])

    def solve(self, b) -> np.ndarray:
        """``M^{-1} b`` from the eigen-factorization.

        Eigenvalues below ``1e-12`` of the largest are dropped, which only
        happens when the fit was built with the condition probe disabled.
        """
        inv = self.__dict__.get("_inv")
        if inv is None:
            keep = self.evals > _RCOND * self.evals[-1]
            inv = np.where(keep, 1.0 / np.where(keep, self.evals, 1.0), 0.0)
            object.__setattr__(self, "_inv", inv)
        return self.evecs @ ((self.evecs.T @ b) * (inv if np.ndim(b) == 1 else inv[:, None]))

    def correction(self, v) -> np.ndarray:
        """``A^T M^{-1} A v`` for a vector or a column stack ``v``."""
        return self.A.T @ self.solve(self.A @ v)


def sketched_fit(K, S, lam: float, y=None, *, max_condition: float = 1e12) -> SketchedFit:
    """Form ``A = S K`` and factor ``M = lam A S^T + A A^T``.

    Raises :class:`SketchConditioningError` if ``M`` is not positive
    definite or its condition number exceeds ``max_condition``; an infinite
    ``max_condition`` disables the probe (used only for timing runs).
    """
    K = np.asarray(K, dtype=float)
    E = _entries(S)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lambda must be positive")
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    if E.shape[1] != K.shape[0]:
        raise ValueError(f"sketch has {E.shape[1]} columns, kernel matrix is {K.shape[0]}x{K.shape[0]}")
    if E.shape[0] > E.shape[1]:
        warnings.warn("sketch has more rows than columns", OversketchWarning, stacklevel=2)
    return fit_from_product(E @ K, E, lam, y, max_condition=max_condition)


def fit_from_product(A, S, lam: float, y=None, *, max_condition: float = 1e12) -> SketchedFit:
    """Build a SketchedFit from an already computed ``A = S K``."""
    A = np.asarray(A, dtype=float)
    E = _entries(S)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lambda must be positive")
    if A.shape != E.shape:
        raise ValueError(f"product S K has shape {A.shape}, sketch has {E.shape}")
    M = lam * (A @ E.T) + A @ A.T
    M = 0.5 * (M + M.T)
    w, V = la.eigh(M)
    if np.isfinite(max_condition) and (not w[0] > 0 or w[-1] / w[0] > max_condition):
        cond = np.inf if not w[0] > 0 else w[-1] / w[0]
        raise SketchConditioningError(
            f"sketched system is singular or ill-conditioned (cond={cond:.3g}); "
            f"the projection dimension m={E.shape[0]} or lambda={lam:g} is likely too small"
        )
    sf = SketchedFit(A, E, M, w, V, float(lam))
    if y is not None:
        y = np.asarray(y, dtype=float).ravel()
        object.__setattr__(sf, "alpha", sf.solve(A @ y) / sf.n)
    return sf


def _sections(k_x, n):
    k = np.asarray(k_x, dtype=float)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    if k.shape[1] != n:
        raise ValueError(f"kernel section has length {k.shape[1]}, expected {n}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel sections must be finite")
    return k, single


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValueError("sigma must be positive")


def sketched_residual(sf: SketchedFit, k_x) -> np.ndarray:
    """Columns ``r = k - A^T M^{-1} A k`` for each section (shape (n, q))."""
    k, _ = _sections(k_x, sf.n)
    kt = k.T
    return kt - sf.correction(kt)


def variance_v2(sf: SketchedFit, k_x, sigma: float):
    """Sketched predictive variance ``sigma^2 / (n lam)^2 * ||k - A^T M^{-1} A k||^2``."""
    _check_sigma(sigma)
    k, single = _sections(k_x, sf.n)
    r = sketched_residual(sf, k)
    base = np.einsum("ij,ij->j", r, r) / (sf.n**2 * sf.lam**2)
    v = sigma**2 * base
    return float(v[0]) if single else v


def variance_v3(sf: SketchedFit, S, k_x, sigma: float):
    """Plug-in variance ``sigma^2 / n^2 * ||A^T M^{-1} A k||^2``.

    ``S`` must be the sketch ``sf`` was built from; it is accepted for
    signature symmetry and checked against the cached copy.
    """
    _check_sigma(sigma)
    if S is not None and _entries(S).shape != sf.S.shape:
        raise ValueError("sketch does not match the fit")
    k, single = _sections(k_x, sf.n)
    c = sf.correction(k.T)
    base = np.einsum("ij,ij->j", c, c) / sf.n**2
    v = sigma**2 * base
    return float(v[0]) if single else v


def sketched_predict_mean(sf: SketchedFit, S, y, k_x):
    """``k(x)^T (I - A^T M^{-1} A) y / (n lam)``."""
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != sf.n:
        raise ValueError("response vector does not match the fit")
    k, single = _sections(k_x, sf.n)
    resid = y - sf.correction(y)
    out = (k @ resid) / (sf.n * sf.lam)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class GapDiagnostics:
    T1: float
    T2: float
    lam: float

    @property
    def ratio1(self) -> float:
        return self.T1**2 / self.lam

    @property
    def ratio2(self) -> float:
        return self.T2**2 / self.lam


def gap_diagnostics(K, spec: SpectralDecomposition, S, lam: float, k_x, *, sf: SketchedFit | None = None):
    """T1 and T2 for the section ``g = k_x``.

    ``T1 = ||g - K (lam K + K^2)^{-1} K g|| / sqrt(n)`` is evaluated in the
    eigenbasis, where the operator is ``diag(lam / (mu + lam))``;
    ``T2 = ||g - A^T M^{-1} A g|| / sqrt(n)``. A (q, n) stack of sections
    returns a list.
    """
    if sf is None:
        sf = sketched_fit(K, S, lam)
    k, single = _sections(k_x, sf.n)
    n = sf.n
    z = spec.U.T @ k.T
    t1 = np.linalg.norm(spec.U @ (z * (lam / (spec.D + lam))[:, None]), axis=0) / np.sqrt(n)
    r = k.T - sf.correction(k.T)
    t2 = np.linalg.norm(r, axis=0) / np.sqrt(n)
    out = [GapDiagnostics(float(a), float(b), float(lam)) for a, b in zip(t1, t2)]
    return out[0] if single else out
