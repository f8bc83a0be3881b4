"""Seeded sub-Gaussian sketch matrices.

Entries are i.i.d. unit-variance draws divided by ``sqrt(m)``, so that
``E[S^T S] = I_n``.  Every row of every block comes from its own Philox
sub-stream keyed by ``(seed, block, row)``; a matrix can therefore be
regenerated bit-for-bit from its seeds alone, and rows may be produced in
any order.

Binary layout written by :func:`save_sketch` (all little-endian)::

    4 bytes   magic b"SKV1"
    uint32    distribution tag (0 = gaussian, 1 = rademacher)
    uint64    seed
    uint64    m
    uint64    n
    m*n f8    entries, row-major
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import SpectralDecomposition

__all__ = [
    "SketchMatrix",
    "AssumptionReport",
    "OversketchWarning",
    "generate",
    "extend",
    "regenerate",
    "check_assumption",
    "save_sketch",
    "load_sketch",
]

DISTRIBUTIONS = ("gaussian", "rademacher")

# spawn-key block ids for the four blocks of a grown sketch
_BASE, _RIGHT, _BELOW, _CORNER = 0, 1, 2, 3

_MAGIC = b"SKV1"
_HEADER = struct.Struct("<4sIQQQ")


class OversketchWarning(UserWarning):
    """Projection dimension exceeds the ambient dimension."""


@dataclass(frozen=True, eq=False)
class SketchMatrix:
    """An m x n sketch together with the recipe that produced it.

    ``raw`` holds the unit-variance draws and ``row_m`` the projection
    dimension each row is normalized by. ``steps`` lists ``(seed, m, n)``
    for the initial draw followed by every growth step.
    """

    distribution: str
    seed: int
    raw: np.ndarray
    row_m: np.ndarray
    steps: tuple
    rescale_on_grow: bool = True

    @property
    def m(self) -> int:
        return self.raw.shape[0]

    @property
    def n(self) -> int:
        return self.raw.shape[1]

    @property
    def entries(self) -> np.ndarray:
        cached = self.__dict__.get("_entries")
        if cached is None:
            cached = self.raw / np.sqrt(self.row_m)[:, None]
            cached.setflags(write=False)
            object.__setattr__(self, "_entries", cached)
        return cached

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _row_stream(seed: int, block: int, row: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(block, row))
    return np.random.Generator(np.random.Philox(ss))


def _draw_block(distribution: str, seed: int, block: int, row0: int, rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols))
    if cols == 0:
        return out
    for i in range(rows):
        gen = _row_stream(seed, block, row0 + i)
        if distribution == "gaussian":
            out[i] = gen.standard_normal(cols)
        else:
            out[i] = 2.0 * gen.integers(0, 2, size=cols) - 1.0
    return out


def _check_dims(m, n):
    if int(m) != m or int(n) != n:
        raise ValueError("sketch dimensions must be integers")
    if m < 1 or n < 1:
        raise ValueError(f"sketch dimensions must be positive, got m={m}, n={n}")
    if m > n:
        warnings.warn(f"projection dimension m={m} exceeds n={n}", OversketchWarning, stacklevel=3)


def generate(distribution: str, seed: int, m: int, n: int) -> SketchMatrix:
    """Draw an m x n sketch with entries of variance 1/m."""
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}")
    _check_dims(m, n)
    raw = _draw_block(distribution, seed, _BASE, 0, int(m), int(n))
    row_m = np.full(int(m), float(m))
    return SketchMatrix(distribution, int(seed), raw, row_m, ((int(seed), int(m), int(n)),))


def extend(S: SketchMatrix, m2: int, n2: int, seed: int, rescale_on_grow: bool | None = None) -> SketchMatrix:
    """Grow ``S`` to m2 x n2.

    The new right block (old rows, new columns), bottom block and corner
    block are drawn from ``seed``. With ``rescale_on_grow`` the retained
    entries are renormalized from ``1/sqrt(m)`` to ``1/sqrt(m2)``; without
    it every row keeps the normalization it was drawn with.
    """
    if rescale_on_grow is None:
        rescale_on_grow = S.rescale_on_grow
    m, n = S.m, S.n
    if m2 < m or n2 < n:
        raise ValueError(f"cannot shrink a sketch from {m}x{n} to {m2}x{n2}")
    if m2 == m and n2 == n and rescale_on_grow == S.rescale_on_grow:
        return S
    _check_dims(m2, n2)
    raw = np.empty((m2, n2))
    raw[:m, :n] = S.raw
    raw[:m, n:] = _draw_block(S.distribution, seed, _RIGHT, 0, m, n2 - n)
    raw[m:, :n] = _draw_block(S.distribution, seed, _BELOW, 0, m2 - m, n)
    raw[m:, n:] = _draw_block(S.distribution, seed, _CORNER, 0, m2 - m, n2 - n)
    if rescale_on_grow:
        row_m = np.full(m2, float(m2))
    else:
        row_m = np.concatenate([S.row_m, np.full(m2 - m, float(m2))])
    steps = S.steps + ((int(seed), int(m2), int(n2)),)
    return SketchMatrix(S.distribution, S.seed, raw, row_m, steps, rescale_on_grow)


def regenerate(distribution: str, steps, rescale_on_grow: bool = True) -> SketchMatrix:
    """Rebuild a sketch from its ``steps`` recipe."""
    steps = list(steps)
    seed, m, n = steps[0]
    S = generate(distribution, seed, m, n)
    S = SketchMatrix(S.distribution, S.seed, S.raw, S.row_m, S.steps, rescale_on_grow)
    for seed, m2, n2 in steps[1:]:
        S = extend(S, m2, n2, seed, rescale_on_grow)
    return S


def from_entries(entries, distribution: str = "gaussian", seed: int = 0) -> SketchMatrix:
    """Wrap an explicit matrix (e.g. an identity or a loaded file) as a sketch."""
    E = np.array(entries, dtype=float)
    if E.ndim != 2:
        raise ValueError("sketch entries must be a 2-d array")
    m, n = E.shape
    row_m = np.full(m, float(m))
    S = SketchMatrix(distribution, int(seed), E * np.sqrt(row_m)[:, None], row_m, ((int(seed), m, n),))
    E.setflags(write=False)
    object.__setattr__(S, "_entries", E)
    return S


def identity_sketch(n: int) -> SketchMatrix:
    return from_entries(np.eye(n))


def save_sketch(path, S: SketchMatrix) -> None:
    tag = DISTRIBUTIONS.index(S.distribution)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, tag, S.seed & 0xFFFFFFFFFFFFFFFF, S.m, S.n))
        fh.write(np.ascontiguousarray(S.entries, dtype="<f8").tobytes())


def load_sketch(path) -> SketchMatrix:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError("truncated sketch header")
        magic, tag, seed, m, n = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError("not a sketch file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != m * n:
        raise ValueError(f"expected {m * n} entries, found {data.size}")
    return from_entries(data.reshape(m, n).astype(float), DISTRIBUTIONS[tag], seed)


@dataclass(frozen=True)
class AssumptionReport:
    smin: float
    smax: float
    tail_opnorm: float
    lam: float
    s_lambda: int
    c_prime: float
    passed: bool

    @property
    def cond_i(self) -> bool:
        return 0.5 <= self.smin and self.smax <= 1.5

    @property
    def cond_ii(self) -> bool:
        return self.tail_opnorm <= self.c_prime * np.sqrt(self.lam)


def check_assumption(S, spec: SpectralDecomposition, lam: float, c_prime: float = 2.0) -> AssumptionReport:
    """Extreme singular values of ``S U1`` and the operator norm of ``S U2 D2^{1/2}``."""
    E = np.asarray(S, dtype=float)
    if spec.split is None or spec.lam != lam:
        spec = spec.with_split(lam)
    if E.shape[1] != spec.n:
        raise ValueError(f"sketch has {E.shape[1]} columns, kernel has {spec.n}")
    s = spec.split
    if s == 0:
        smin = smax = 1.0
    else:
        sv = np.linalg.svd(E @ spec.U1, compute_uv=False)
        smax, smin = float(sv[0]), float(sv[-1]) if E.shape[0] >= s else 0.0
    if s == spec.n:
        tail = 0.0
    else:
        tail = float(np.linalg.norm((E @ spec.U2) * np.sqrt(spec.D2), 2))
    passed = (0.5 <= smin) and (smax <= 1.5) and (tail <= c_prime * np.sqrt(lam))
    return AssumptionReport(smin, smax, tail, float(lam), s, float(c_prime), bool(passed))
