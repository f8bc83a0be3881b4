"""Synthetic data, gap sweeps over n / m / sigma, timing and CSV ingestion."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import sketch as sk
from .exact_krr import fit, variance_v1
from .kernels import Dataset, KernelSpec, build_kernel_matrix, kernel_sections
from .sketched_krr import sketched_fit, variance_v2

__all__ = [
    "SyntheticSpec",
    "GapReport",
    "generate",
    "test_function",
    "m_rule",
    "lam_rule",
    "compute_gap",
    "gap_sweep_n",
    "gap_sweep_m",
    "gap_sweep_sigma",
    "summarize",
    "timing_benchmark",
    "load_csv_dataset",
    "write_reports_csv",
]

GENERATORS = ("uniform_quadratic", "clustered", "gaussian_mixture")


def test_function(x):
    """The regression function ``-1 + 2 x^2`` used by every synthetic setting."""
    return -1.0 + 2.0 * np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class SyntheticSpec:
    generator: str
    n: int
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def generate(spec: SyntheticSpec) -> Dataset:
    """Draw a dataset ``y = -1 + 2x^2 + N(0, sigma^2)``.

    ``uniform_quadratic``: x ~ U[0, 1].
    ``clustered``: ceil(sqrt(n)) points from U[0, 1/2], the rest at
    ``1 + N(0, 1/n)``.
    ``gaussian_mixture``: equal mixture of N(0.5, 0.5^2) and N(5, 5^2)
    (standard deviations, not variances).
    """
    rng = np.random.default_rng([spec.seed, 0x5EED])
    n = spec.n
    if spec.generator == "uniform_quadratic":
        x = rng.uniform(0.0, 1.0, n)
    elif spec.generator == "clustered":
        k = math.ceil(math.sqrt(n))
        x = np.concatenate([rng.uniform(0.0, 0.5, k), 1.0 + rng.normal(0.0, 1.0 / math.sqrt(n), n - k)])
    else:
        pick = rng.random(n) < 0.5
        x = np.where(pick, rng.normal(0.5, 0.5, n), rng.normal(5.0, 5.0, n))
    y = test_function(x) + spec.sigma * rng.standard_normal(n)
    return Dataset(x[:, None], y, spec.sigma)


# Sketch-size and regularization rules ------------------------------------

def m_rule(name: str, n: int, *, c: float = 1.0, alpha: float = 2.0, p: float = 2.0, scale: float | None = None) -> int:
    """Projection dimension for ``n`` samples.

    ``poly``: ``ceil(scale * n^(c / (2 alpha + 1)))`` (scale defaults to 1.5).
    ``exp``: ``ceil(scale * (log n)^(c / p))`` (scale defaults to 2).
    ``log``: ``ceil(log n)``.
    ``full``: ``n``.
    """
    if name == "poly":
        return math.ceil((1.5 if scale is None else scale) * n ** (c / (2 * alpha + 1)))
    if name == "exp":
        return math.ceil((2.0 if scale is None else scale) * math.log(n) ** (c / p))
    if name == "log":
        return math.ceil(math.log(n))
    if name == "full":
        return n
    raise ValueError(f"unknown m rule {name!r}")


def lam_rule(name: str, n: int, *, alpha: float = 2.0, p: float = 2.0, value: float | None = None) -> float:
    """Regularization level for ``n`` samples.

    ``poly``: ``n^(-2 alpha / (2 alpha + 1))``; ``exp``: ``(log n)^(1/p) / n``;
    ``fixed``: ``value``.
    """
    if name == "poly":
        return n ** (-2 * alpha / (2 * alpha + 1))
    if name == "exp":
        return math.log(n) ** (1 / p) / n
    if name == "fixed":
        if value is None or not value > 0:
            raise ValueError("fixed lambda needs a positive value")
        return float(value)
    raise ValueError(f"unknown lambda rule {name!r}")


# Gap computation ----------------------------------------------------------

@dataclass(frozen=True)
class GapReport:
    n: int
    m: int
    sigma: float
    lam: float
    kernel: str
    seed: int
    sup_gap: float
    mean_gap: float
    grid_size: int
    exact_time: float
    sketched_time: float


def default_grid(size: int = 100) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


def sketch_seed(seed: int, n: int, tag: int = 1) -> int:
    """Sketch seed derived from the run seed, independent of the data stream."""
    return int(np.random.SeedSequence([seed, tag, n]).generate_state(1, np.uint64)[0])


@dataclass
class _Cell:
    """Data, kernel matrix and exact variance shared by all variations of one (n, seed)."""

    data: Dataset
    K: np.ndarray
    sections: np.ndarray
    v1_unit: np.ndarray
    lam: float
    exact_time: float


def _prepare(kernel: KernelSpec, n: int, seed: int, lam: float, grid: np.ndarray, generator: str) -> _Cell:
    data = generate(SyntheticSpec(generator, n, 1.0, seed))
    K = build_kernel_matrix(kernel, data)
    sections = kernel_sections(kernel, data.inputs, grid)
    t0 = time.perf_counter()
    ef = fit(K, data.responses, lam)
    v1 = variance_v1(ef, sections, 1.0)
    return _Cell(data, K, sections, v1, lam, time.perf_counter() - t0)


def compute_gap(cell: _Cell, m: int, seed: int, sigma: float = 1.0, distribution: str = "gaussian"):
    """``(sup, mean)`` of ``|V1 - V2|`` over the grid and the sketched wall time."""
    n = cell.K.shape[0]
    t0 = time.perf_counter()
    S = sk.generate(distribution, sketch_seed(seed, n), m, n)
    sf = sketched_fit(cell.K, S, cell.lam)
    v2 = variance_v2(sf, cell.sections, 1.0)
    elapsed = time.perf_counter() - t0
    gap = sigma**2 * np.abs(cell.v1_unit - v2)
    return float(gap.max()), float(gap.mean()), elapsed


def _pmap(func, items, threads: int | None):
    threads = threads or int(os.environ.get("SKETCHVAR_THREADS", "1") or 1)
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def gap_sweep_n(kernel: KernelSpec, n_list, m_of_n, lam_of_n, sigma: float = 1.0, grid=None, seeds=(0,), *,
                generator: str = "uniform_quadratic", threads: int | None = None) -> list[GapReport]:
    """Sup-gap reports for every ``(n, seed)``; ``m_of_n`` and ``lam_of_n`` map n to m and lambda."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    jobs = [(int(n), int(seed)) for n in n_list for seed in seeds]

    def run(job):
        n, seed = job
        lam = float(lam_of_n(n))
        if not lam > 0:
            raise ValueError(f"lambda rule gave {lam} at n={n}")
        cell = _prepare(kernel, n, seed, lam, grid, generator)
        m = int(m_of_n(n))
        sup, mean, t_sk = compute_gap(cell, m, seed, sigma)
        return GapReport(n, m, sigma, lam, kernel.tag, seed, sup, mean, grid.size, cell.exact_time, t_sk)

    return _pmap(run, jobs, threads)


def gap_sweep_m(kernel: KernelSpec, n: int, c_list, m_of_c, lam: float, sigma: float = 1.0, grid=None,
                seeds=(0,), *, generator: str = "uniform_quadratic", threads: int | None = None) -> list[GapReport]:
    """Reports across projection dimensions ``m_of_c(c)`` at fixed n.

    One dataset per seed is reused for every c, and the sketch seed depends
    only on (seed, n), so larger sketches are not paired with fresh data.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)

    def run(seed):
        cell = _prepare(kernel, n, seed, lam, grid, generator)
        out = []
        for c in c_list:
            m = int(m_of_c(c))
            sup, mean, t_sk = compute_gap(cell, m, seed, sigma)
            out.append(GapReport(n, m, sigma, lam, kernel.tag, seed, sup, mean, grid.size, cell.exact_time, t_sk))
        return out

    per_seed = _pmap(run, [int(s) for s in seeds], threads)
    return [per_seed[j][i] for i in range(len(c_list)) for j in range(len(per_seed))]


def gap_sweep_sigma(kernel: KernelSpec, n: int, m: int, lam: float, sigma_list, grid=None, seeds=(0,), *,
                    generator: str = "uniform_quadratic", threads: int | None = None):
    """Reports across noise levels, plus ``sup_gap(sigma) / sup_gap(1)`` per report."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)

    def run(seed):
        cell = _prepare(kernel, n, seed, lam, grid, generator)
        base_sup, base_mean, t_sk = compute_gap(cell, m, seed, 1.0)
        out = []
        for s in sigma_list:
            s = float(s)
            sup, mean, _ = compute_gap(cell, m, seed, s)
            rep = GapReport(n, m, s, lam, kernel.tag, seed, sup, mean, grid.size, cell.exact_time, t_sk)
            out.append((rep, sup / base_sup))
        return out

    per_seed = _pmap(run, [int(s) for s in seeds], threads)
    return [per_seed[j][i] for i in range(len(sigma_list)) for j in range(len(per_seed))]


def summarize(reports, key: str = "n", value: str = "sup_gap"):
    """Seed-averaged ``(key, mean, half_width)`` rows, half width = 1.96 s / sqrt(k)."""
    groups: dict = {}
    for r in reports:
        groups.setdefault(getattr(r, key), []).append(getattr(r, value))
    rows = []
    for k, vals in groups.items():
        vals = np.asarray(vals, dtype=float)
        hw = 1.96 * vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
        rows.append((k, float(vals.mean()), float(hw)))
    return rows


def write_reports_csv(path, reports, extra: dict | None = None) -> None:
    """GapReport rows, columns in field order, with optional extra columns appended."""
    names = [f.name for f in fields(GapReport)]
    extra = extra or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + list(extra))
        for i, r in enumerate(reports):
            d = asdict(r)
            w.writerow([d[k] for k in names] + [extra[c][i] for c in extra])


# Timing -------------------------------------------------------------------

def timing_benchmark(n: int, m: int, kernel: KernelSpec | None = None, queries: int = 100, *,
                     lam: float | None = None, seed: int = 0, repeats: int = 3) -> dict:
    """Wall time of the exact path (factor + per-query V1) against the sketched
    path (sketch + S K + M + per-query V2). Building K is shared and excluded.
    The minimum over ``repeats`` runs is reported.
    """
    kernel = kernel or KernelSpec.gaussian(0.25)
    data = generate(SyntheticSpec("uniform_quadratic", n, 1.0, seed))
    lam = lam_rule("exp", n) if lam is None else lam
    K = build_kernel_matrix(kernel, data)
    sections = kernel_sections(kernel, data.inputs, np.linspace(0.0, 1.0, queries))
    exact, sketched = [], []
    for _ in range(repeats):
        t0 = time.perf_counter()
        ef = fit(K, data.responses, lam)
        variance_v1(ef, sections, 1.0)
        exact.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        S = sk.generate("gaussian", sketch_seed(seed, n), m, n)
        sf = sketched_fit(K, S, lam, max_condition=np.inf)
        variance_v2(sf, sections, 1.0)
        sketched.append(time.perf_counter() - t0)
    return {"n": n, "m": m, "queries": queries, "exact_time": min(exact), "sketched_time": min(sketched)}


def time_exact_factorization(n: int, repeats: int = 5, seed: int = 0) -> float:
    """Best-of-``repeats`` Cholesky time for a Gaussian-kernel system of size n."""
    data = generate(SyntheticSpec("uniform_quadratic", n, 1.0, seed))
    K = build_kernel_matrix(KernelSpec.gaussian(0.25), data)
    y = data.responses
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fit(K, y, lam_rule("exp", n))
        best = min(best, time.perf_counter() - t0)
    return best


# CSV ingestion ------------------------------------------------------------

@dataclass(frozen=True)
class Standardization:
    means: np.ndarray
    scales: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.scales


def load_csv_dataset(path, response_column: str, feature_columns=None, standardize: bool = False,
                     stats: Standardization | None = None):
    """Read a header-row CSV into a Dataset.

    ``feature_columns=None`` uses every column other than the response.
    With ``standardize`` the features are centred and scaled using ``stats``
    if given, otherwise statistics of this file. Returns
    ``(dataset, stats_or_None)``. Row numbers in errors count data rows
    from 1 (the header is row 0).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    if feature_columns is None:
        feature_columns = [h for h in header if h != response_column]
    for col in [response_column, *feature_columns]:
        if col not in header:
            raise ValueError(f"{path}: missing column {col!r}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = [header.index(c) for c in feature_columns]
    ycol = header.index(response_column)
    X = np.empty((len(rows), len(cols)))
    y = np.empty(len(rows))
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        try:
            X[i - 1] = [float(row[j]) for j in cols]
            y[i - 1] = float(row[ycol])
        except ValueError:
            raise ValueError(f"{path}: row {i} has a missing or non-numeric value") from None
        if not (np.all(np.isfinite(X[i - 1])) and np.isfinite(y[i - 1])):
            raise ValueError(f"{path}: row {i} has a non-finite value")
    if standardize:
        if stats is None:
            scales = X.std(axis=0)
            scales[scales == 0] = 1.0
            stats = Standardization(X.mean(axis=0), scales)
        X = stats.apply(X)
    return Dataset(X, y), (stats if standardize else None)
