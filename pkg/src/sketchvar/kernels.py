"""Kernel functions, 1/n-scaled kernel matrices and their eigensystems.

The kernel matrix used throughout the package carries the 1/n factor,
``K[i, j] = K(X_i, X_j) / n``, while kernel sections ``k(x)`` evaluated at a
query point do not.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

__all__ = [
    "Dataset",
    "KernelSpec",
    "SpectralDecomposition",
    "EigenDecompositionError",
    "evaluate_kernel",
    "kernel_block",
    "kernel_sections",
    "build_kernel_matrix",
    "decompose",
    "effective_dimension",
]

_FAMILIES = ("gaussian", "sobolev_first_order", "sobolev_cubic", "explicit_spectrum")
_ROW_BLOCK = 256


class EigenDecompositionError(RuntimeError):
    """Raised when the symmetric eigensolver fails to converge."""


@dataclass(frozen=True)
class Dataset:
    """Regression sample: ``inputs`` of shape (n, d) and ``responses`` of length n."""

    inputs: np.ndarray
    responses: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.responses, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("inputs must be a non-empty (n, d) array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"inputs have {X.shape[0]} rows but responses have {y.shape[0]} entries"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.inputs[idx], self.responses[idx], self.sigma)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family and its parameters.

    Families
    --------
    gaussian
        ``exp(-|u - v|^2 / (2 h^2))`` with bandwidth ``h``.
    sobolev_first_order
        ``1 + min(u, v)`` on [0, 1]; eigenvalues decay like ``k^-2``.
    sobolev_cubic
        Cubic spline kernel ``1 + uv + min^2 (3 max - min) / 6`` on [0, 1];
        eigenvalues decay like ``k^-4``.
    explicit_spectrum
        ``sum_k mu_k phi_k(u) phi_k(v)`` with the cosine basis
        ``phi_0 = 1, phi_k = sqrt(2) cos(pi k u)`` on [0, 1] and a prescribed
        spectrum, either ``mu_k = (k+1)^(-2 alpha)`` (``decay="polynomial"``)
        or ``mu_k = exp(-rate (k+1)^power)`` (``decay="exponential"``).
    """

    family: str
    bandwidth: float | None = None
    decay: str | None = None
    alpha: float | None = None
    rate: float | None = None
    power: float | None = None
    n_terms: int = 100

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian":
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ValueError("gaussian kernel needs a strictly positive bandwidth")
        if self.family == "explicit_spectrum":
            if self.decay == "polynomial":
                if self.alpha is None or not self.alpha > 0:
                    raise ValueError("polynomial spectrum needs alpha > 0")
            elif self.decay == "exponential":
                if self.rate is None or not self.rate > 0 or self.power is None or not self.power > 0:
                    raise ValueError("exponential spectrum needs rate > 0 and power > 0")
            else:
                raise ValueError("explicit_spectrum decay must be 'polynomial' or 'exponential'")
            if self.n_terms < 1:
                raise ValueError("n_terms must be positive")

    @classmethod
    def gaussian(cls, bandwidth: float = 0.25) -> "KernelSpec":
        return cls("gaussian", bandwidth=bandwidth)

    @classmethod
    def sobolev_first_order(cls) -> "KernelSpec":
        return cls("sobolev_first_order")

    @classmethod
    def sobolev_cubic(cls) -> "KernelSpec":
        return cls("sobolev_cubic")

    @classmethod
    def polynomial_spectrum(cls, alpha: float, n_terms: int = 100) -> "KernelSpec":
        return cls("explicit_spectrum", decay="polynomial", alpha=alpha, n_terms=n_terms)

    @classmethod
    def exponential_spectrum(cls, rate: float, power: float, n_terms: int = 100) -> "KernelSpec":
        return cls("explicit_spectrum", decay="exponential", rate=rate, power=power, n_terms=n_terms)

    @property
    def on_unit_interval(self) -> bool:
        return self.family != "gaussian"

    @property
    def tag(self) -> str:
        if self.family == "gaussian":
            return f"gaussian(h={self.bandwidth:g})"
        if self.family == "explicit_spectrum":
            if self.decay == "polynomial":
                return f"spectrum(poly,alpha={self.alpha:g})"
            return f"spectrum(exp,rate={self.rate:g},p={self.power:g})"
        return self.family

    def spectrum(self) -> np.ndarray:
        """Population eigenvalues of an explicit_spectrum kernel."""
        k = np.arange(1, self.n_terms + 1, dtype=float)
        if self.decay == "polynomial":
            return k ** (-2.0 * self.alpha)
        return np.exp(-self.rate * k**self.power)

    def to_dict(self) -> dict:
        out = {"family": self.family}
        for name in ("bandwidth", "decay", "alpha", "rate", "power"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.family == "explicit_spectrum":
            out["n_terms"] = self.n_terms
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)


def _as_points(X, d: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None] if d in (None, 1) else X[None, :]
    if X.ndim != 2:
        raise ValueError("points must be a scalar, a vector or an (n, d) array")
    if not np.all(np.isfinite(X)):
        raise ValueError("kernel inputs must be finite")
    return X


def _check_unit_interval(spec: KernelSpec, *arrays):
    for X in arrays:
        if X.shape[1] != 1:
            raise ValueError(f"{spec.family} kernel is defined for 1-d inputs only")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValueError(f"{spec.family} kernel inputs must lie in [0, 1]")


def _cosine_features(x: np.ndarray, n_terms: int) -> np.ndarray:
    k = np.arange(n_terms, dtype=float)
    phi = np.sqrt(2.0) * np.cos(np.pi * x[:, None] * k[None, :])
    phi[:, 0] = 1.0
    return phi


def _block(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if spec.family == "gaussian":
        diff = X[:, None, :] - Z[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        return np.exp(-sq / (2.0 * spec.bandwidth**2))
    u = X[:, 0][:, None]
    v = Z[:, 0][None, :]
    if spec.family == "sobolev_first_order":
        return 1.0 + np.minimum(u, v)
    if spec.family == "sobolev_cubic":
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        return 1.0 + u * v + lo**2 * (3.0 * hi - lo) / 6.0
    mu = spec.spectrum()
    return (_cosine_features(X[:, 0], spec.n_terms) * mu) @ _cosine_features(Z[:, 0], spec.n_terms).T


def kernel_block(spec: KernelSpec, X, Z) -> np.ndarray:
    """Matrix of kernel values ``K(X_i, Z_j)`` (no 1/n factor)."""
    X = _as_points(X)
    Z = _as_points(Z, X.shape[1])
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    if spec.on_unit_interval:
        _check_unit_interval(spec, X, Z)
    out = np.empty((X.shape[0], Z.shape[0]))
    for start in range(0, X.shape[0], _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, X.shape[0])
        out[start:stop] = _block(spec, X[start:stop], Z)
    if not np.all(np.isfinite(out)):
        raise ValueError("kernel produced non-finite values")
    return out


def kernel_sections(spec: KernelSpec, train_inputs, queries) -> np.ndarray:
    """Rows ``k(x) = (K(x, X_1), ..., K(x, X_n))`` for each query point."""
    X = _as_points(train_inputs)
    return kernel_block(spec, _as_points(queries, X.shape[1]), X)


def evaluate_kernel(spec: KernelSpec, u, v) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(kernel_block(spec, u[None, :], v[None, :])[0, 0])


def build_kernel_matrix(spec: KernelSpec, data) -> np.ndarray:
    """The 1/n-scaled Gram matrix of ``data`` (a Dataset or an input array).

    Each unordered pair is evaluated once and mirrored, so the result is
    exactly symmetric.
    """
    X = data.inputs if isinstance(data, Dataset) else _as_points(data)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    G = kernel_block(spec, X, X)
    upper = np.triu(G)
    K = upper + np.triu(G, 1).T
    return K / n


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem ``K = U diag(D) U^T`` with eigenvalues sorted descending.

    ``split`` is the effective dimension used to partition ``U = (U1, U2)``;
    it is ``None`` until a regularization level is attached via
    :meth:`with_split`.
    """

    U: np.ndarray
    D: np.ndarray
    split: int | None = None
    lam: float | None = None
    n_clamped: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def U1(self) -> np.ndarray:
        return self.U[:, : self._s]

    @property
    def U2(self) -> np.ndarray:
        return self.U[:, self._s :]

    @property
    def D1(self) -> np.ndarray:
        return self.D[: self._s]

    @property
    def D2(self) -> np.ndarray:
        return self.D[self._s :]

    @property
    def _s(self) -> int:
        if self.split is None:
            raise ValueError("no split index; call with_split(lam) first")
        return self.split

    def with_split(self, lam: float) -> "SpectralDecomposition":
        return SpectralDecomposition(self.U, self.D, effective_dimension(self.D, lam), lam, self.n_clamped)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.D) @ self.U.T


def decompose(K, lam: float | None = None, *, psd_tol: float = 1e-10) -> SpectralDecomposition:
    """Symmetric eigendecomposition of a kernel matrix.

    Negative eigenvalues that are rounding noise (above ``-psd_tol * mu_1``)
    are clamped to zero; anything more negative means ``K`` is not PSD and
    raises ``ValueError``.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    if not np.array_equal(K, K.T):
        if not np.allclose(K, K.T, rtol=0.0, atol=1e-12 * max(np.abs(K).max(), 1.0)):
            raise ValueError("kernel matrix is not symmetric")
        K = 0.5 * (K + K.T)
    try:
        w, V = la.eigh(K)
    except la.LinAlgError as exc:
        raise EigenDecompositionError(str(exc)) from exc
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    top = max(w[0], 0.0)
    if w[-1] < -psd_tol * top:
        raise ValueError(f"kernel matrix is not PSD: smallest eigenvalue {w[-1]:.3e}")
    neg = w < 0
    w[neg] = 0.0
    dec = SpectralDecomposition(V, w, n_clamped=int(neg.sum()))
    return dec.with_split(lam) if lam is not None else dec


def effective_dimension(D, lam: float) -> int:
    """Number of eigenvalues strictly above ``lam``.

    This is ``argmin{j : mu_j <= lam} - 1`` in 1-based indexing, with the
    value ``n`` when every eigenvalue exceeds ``lam``.
    """
    D = np.asarray(D, dtype=float).ravel()
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if np.any(np.diff(D) > 0):
        raise ValueError("eigenvalues must be sorted in non-increasing order")
    if np.any(D < 0):
        raise ValueError("eigenvalues must be non-negative")
    return int(np.count_nonzero(D > lam))
