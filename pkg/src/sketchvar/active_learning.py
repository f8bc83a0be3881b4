"""Variance-weighted active learning with an incrementally maintained S K.

Each iteration fits (sketched) KRR on the labeled set, scores the pool by
the sketched variance V2, draws a batch with probability proportional to
the scores, and moves it into the labeled set. When the labeled set grows
from n0 to n0 + ns (and the sketch from m1 to m2 rows) the product is
assembled block-wise,

    [S1 S12] [K1  K12]   [S1 K1 + S12 K21    S1 K12 + S12 K2 ]
    [S21 S2] [K21 K2 ] = [S21 K1 + S2 K21    S21 K12 + S2 K2 ]

reusing ``S1 K1`` from the previous iteration.

Because the kernel matrix carries a 1/n factor that changes as n grows, the
cache holds ``S G`` for the unscaled Gram matrix ``G``; ``S K`` is
``S G / n0``.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import sketch as sk
from .exact_krr import estimate_sigma, fit, predict_mean, variance_v1
from .experiments import lam_rule, m_rule
from .kernels import Dataset, KernelSpec, kernel_block
from .sketched_krr import fit_from_product, sketched_predict_mean, variance_v2

__all__ = [
    "FlopCounter",
    "AcquisitionBatch",
    "ActiveLearningConfig",
    "ActiveLearningState",
    "IterationRecord",
    "ActiveLearner",
    "incremental_sk",
    "weighted_sample_without_replacement",
    "run_active_learning",
    "write_history_csv",
]

HISTORY_COLUMNS = ("iteration", "n_labeled", "m", "lambda", "test_mse", "acquisition_mode", "seed", "wall_time_ms")


class FlopCounter:
    """Counts scalar multiply-adds of the matrix products it performs."""

    def __init__(self):
        self.total = 0

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.total += a.shape[0] * a.shape[1] * (b.shape[1] if b.ndim == 2 else 1)
        return a @ b

    def scale(self, c: float, a: np.ndarray) -> np.ndarray:
        self.total += a.size
        return c * a


def incremental_sk(sk_cache, S1, K_blocks, S_blocks, *, K1=None, scale: float = 1.0, counter: FlopCounter | None = None):
    """Grow the product ``S K`` by one acquisition step.

    Parameters
    ----------
    sk_cache : (m1, n0) array
        The previous product ``S1_old K1``.
    S1 : (m1, n0) array
        The retained block of the new sketch (``scale * S1_old`` up to
        rounding when rows are renormalized).
    K_blocks : (K12, K21, K2)
        Kernel blocks of shapes (n0, ns), (ns, n0), (ns, ns).
    S_blocks : (S12, S21, S2)
        New sketch blocks of shapes (m1, ns), (m2 - m1, n0), (m2 - m1, ns).
    K1 : (n0, n0) array, optional
        Needed only when new sketch rows are added (``S21 K1``).
    scale : float
        Factor relating the retained sketch block to the one in ``sk_cache``.
    """
    counter = counter or FlopCounter()
    K12, K21, K2 = (np.asarray(b, dtype=float) for b in K_blocks)
    S12, S21, S2 = (np.asarray(b, dtype=float) for b in S_blocks)
    sk_cache = np.asarray(sk_cache, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    m1, n0 = sk_cache.shape
    ns = K2.shape[0]
    dm = S21.shape[0]
    expected = {
        "S1": (S1.shape, (m1, n0)),
        "K12": (K12.shape, (n0, ns)),
        "K21": (K21.shape, (ns, n0)),
        "K2": (K2.shape, (ns, ns)),
        "S12": (S12.shape, (m1, ns)),
        "S21": (S21.shape, (dm, n0)),
        "S2": (S2.shape, (dm, ns)),
    }
    for name, (got, want) in expected.items():
        if got != want:
            raise ValueError(f"{name} has shape {got}, expected {want}")
    if dm and K1 is None:
        raise ValueError("K1 is required when the sketch gains rows")
    if ns == 0 and dm == 0:
        return sk_cache if scale == 1.0 else counter.scale(scale, sk_cache)

    top_left = sk_cache if scale == 1.0 else counter.scale(scale, sk_cache)
    if ns:
        top_left = top_left + counter.matmul(S12, K21)
    top = [top_left]
    if ns:
        top.append(counter.matmul(S1, K12) + counter.matmul(S12, K2))
    rows = [np.hstack(top)]
    if dm:
        bottom = [counter.matmul(S21, np.asarray(K1, dtype=float))]
        if ns:
            bottom[0] = bottom[0] + counter.matmul(S2, K21)
            bottom.append(counter.matmul(S21, K12) + counter.matmul(S2, K2))
        rows.append(np.hstack(bottom))
    return np.vstack(rows)


@dataclass(frozen=True)
class AcquisitionBatch:
    indices: np.ndarray
    weights: np.ndarray


def weighted_sample_without_replacement(weights, n_s: int, rng_seed) -> AcquisitionBatch:
    """Draw ``n_s`` distinct positions, each draw proportional to the remaining weights.

    If every remaining weight is zero the draw is uniform over the remaining
    positions.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if n_s > w.size:
        raise ValueError(f"cannot draw {n_s} points from a pool of {w.size}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    remaining = w.copy()
    alive = np.ones(w.size, dtype=bool)
    chosen = np.empty(n_s, dtype=int)
    for t in range(n_s):
        total = remaining.sum()
        if total > 0:
            cdf = np.cumsum(remaining)
            i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            i = min(i, w.size - 1)
        else:
            i = int(rng.choice(np.flatnonzero(alive)))
        chosen[t] = i
        alive[i] = False
        remaining[i] = 0.0
    return AcquisitionBatch(chosen, w[chosen])


@dataclass
class ActiveLearningConfig:
    initial_size: int = 100
    batch_size: int = 30
    iterations: int = 20
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec.gaussian(0.25))
    m_rule: str = "log"
    m_c: float = 1.0
    m_scale: float | None = None
    alpha: float = 2.0
    p: float = 2.0
    lam_rule: str = "exp"
    lam_value: float | None = None
    acquisition: str = "v2"
    model: str = "sketched"
    distribution: str = "gaussian"
    sigma: float | None = 1.0
    seed: int = 0
    early_stop: bool = False
    early_stop_window: int = 3
    early_stop_tol: float = 1e-4
    rescale_on_grow: bool = True
    verify_cache: bool = False

    def __post_init__(self):
        if self.acquisition not in ("v2", "v1", "uniform"):
            raise ValueError(f"unknown acquisition mode {self.acquisition!r}")
        if self.model not in ("sketched", "exact"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.acquisition == "v2" and self.model != "sketched":
            raise ValueError("v2 acquisition needs the sketched model")
        if self.acquisition == "v1" and self.model != "exact":
            raise ValueError("v1 acquisition needs the exact model")
        if self.initial_size < 1 or self.batch_size < 0 or self.iterations < 0:
            raise ValueError("sizes and iteration budget must be non-negative (initial_size >= 1)")

    def m_for(self, n: int) -> int:
        return m_rule(self.m_rule, n, c=self.m_c, alpha=self.alpha, p=self.p, scale=self.m_scale)

    def lam_for(self, n: int) -> float:
        return lam_rule(self.lam_rule, n, alpha=self.alpha, p=self.p, value=self.lam_value)


@dataclass
class IterationRecord:
    iteration: int
    n_labeled: int
    m: int
    lam: float
    test_mse: float
    acquisition_mode: str
    seed: int
    wall_time_ms: float

    def row(self) -> list:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return [d[c] for c in HISTORY_COLUMNS]


@dataclass
class ActiveLearningState:
    labeled: list
    unlabeled: list
    S: sk.SketchMatrix | None
    sg_cache: np.ndarray | None
    history: list = field(default_factory=list)
    step_flops: list = field(default_factory=list)
    truncated: bool = False

    @property
    def n0(self) -> int:
        return len(self.labeled)

    @property
    def sk_cache(self) -> np.ndarray:
        """The current ``S K`` over the labeled set (K with its 1/n0 factor)."""
        return self.sg_cache / self.n0


class ActiveLearner:
    """Runs the acquisition loop on a labeled/unlabeled split of ``master``."""

    def __init__(self, master: Dataset, test: Dataset, config: ActiveLearningConfig):
        self.master = master
        self.test = test
        self.config = config
        if config.initial_size > master.n:
            raise ValueError("initial labeled set larger than the pool")
        rng = np.random.default_rng([config.seed, 1])
        order = rng.permutation(master.n)
        labeled = sorted(int(i) for i in order[: config.initial_size])
        chosen = set(labeled)
        unlabeled = [i for i in range(master.n) if i not in chosen]
        self.state = ActiveLearningState(labeled, unlabeled, None, None)
        self.iteration = 0
        if config.model == "sketched":
            self._init_sketch()

    # sketch maintenance -------------------------------------------------
    def _seed_for(self, tag: int, it: int) -> int:
        return int(np.random.SeedSequence([self.config.seed, tag, it]).generate_state(1, np.uint64)[0])

    def _gram(self, rows, cols) -> np.ndarray:
        X = self.master.inputs
        return kernel_block(self.config.kernel, X[rows], X[cols])

    def _init_sketch(self):
        st = self.state
        n0 = st.n0
        m = max(1, min(self.config.m_for(n0), n0))
        S = sk.generate(self.config.distribution, self._seed_for(3, 0), m, n0)
        if self.config.rescale_on_grow is False:
            S = sk.SketchMatrix(S.distribution, S.seed, S.raw, S.row_m, S.steps, False)
        counter = FlopCounter()
        st.S = S
        st.sg_cache = counter.matmul(S.entries, self._gram(st.labeled, st.labeled))
        st.step_flops.append(counter.total)

    def _grow(self, new_idx):
        st = self.state
        cfg = self.config
        n0, ns = st.n0, len(new_idx)
        m1 = st.S.m
        m2 = max(m1, min(cfg.m_for(n0 + ns), n0 + ns))
        S_new = sk.extend(st.S, m2, n0 + ns, self._seed_for(3, self.iteration + 1))
        E = S_new.entries
        old = st.labeled
        K12 = self._gram(old, new_idx)
        K2 = self._gram(new_idx, new_idx)
        K1 = self._gram(old, old) if m2 > m1 else None
        scale = math.sqrt(st.S.row_m[0] / S_new.row_m[0]) if S_new.rescale_on_grow else 1.0
        counter = FlopCounter()
        st.sg_cache = incremental_sk(
            st.sg_cache,
            E[:m1, :n0],
            (K12, K12.T, K2),
            (E[:m1, n0:], E[m1:, :n0], E[m1:, n0:]),
            K1=K1,
            scale=scale,
            counter=counter,
        )
        st.step_flops.append(counter.total)
        st.S = S_new

    def cache_error(self) -> float:
        """Max-entry difference between the cached and a from-scratch ``S K``."""
        st = self.state
        full = st.S.entries @ self._gram(st.labeled, st.labeled)
        return float(np.abs(full - st.sg_cache).max() / st.n0)

    # one iteration ------------------------------------------------------
    def _fit_and_score(self):
        st = self.state
        cfg = self.config
        X = self.master.inputs
        y = self.master.responses[st.labeled]
        n0 = st.n0
        lam = cfg.lam_for(n0)
        k_test = kernel_block(cfg.kernel, self.test.inputs, X[st.labeled])
        k_pool = kernel_block(cfg.kernel, X[st.unlabeled], X[st.labeled]) if st.unlabeled else None
        scores = None
        if cfg.model == "sketched":
            # pool points can make S K numerically rank-deficient; fall back
            # to the truncated solve instead of aborting the loop
            sf = fit_from_product(st.sk_cache, st.S, lam, max_condition=np.inf)
            pred = sketched_predict_mean(sf, st.S, y, k_test)
            if cfg.acquisition == "v2" and k_pool is not None:
                # scores are sigma-invariant up to scale; sigma=1 unless configured
                scores = variance_v2(sf, k_pool, cfg.sigma or 1.0)
            m = st.S.m
        else:
            K = self._gram(st.labeled, st.labeled) / n0
            ef = fit(K, y, lam)
            pred = predict_mean(ef, k_test)
            if cfg.acquisition == "v1" and k_pool is not None:
                sigma = cfg.sigma if cfg.sigma is not None else math.sqrt(estimate_sigma(ef, y))
                scores = variance_v1(ef, k_pool, sigma)
            m = 0
        mse = float(np.mean((pred - self.test.responses) ** 2))
        return lam, m, mse, scores

    def _record(self, lam, m, mse, t0):
        rec = IterationRecord(
            self.iteration, self.state.n0, m, lam, mse, self.config.acquisition,
            self.config.seed, 1e3 * (time.perf_counter() - t0),
        )
        self.state.history.append(rec)
        return rec

    def _converged(self) -> bool:
        cfg = self.config
        h = self.state.history
        w = cfg.early_stop_window
        if not cfg.early_stop or len(h) <= w:
            return False
        return h[-1 - w].test_mse - h[-1].test_mse < cfg.early_stop_tol

    def run(self) -> list:
        cfg = self.config
        st = self.state
        t0 = time.perf_counter()
        lam, m, mse, scores = self._fit_and_score()
        self._record(lam, m, mse, t0)
        while self.iteration < cfg.iterations:
            if self._converged():
                break
            if len(st.unlabeled) < cfg.batch_size or not st.unlabeled:
                st.truncated = True
                break
            t0 = time.perf_counter()
            rng = np.random.default_rng([cfg.seed, 2, self.iteration])
            if cfg.acquisition == "uniform":
                weights = np.ones(len(st.unlabeled))
            else:
                weights = scores
            batch = weighted_sample_without_replacement(weights, cfg.batch_size, rng)
            new_idx = [st.unlabeled[i] for i in batch.indices]
            if cfg.model == "sketched":
                self._grow(new_idx)
            picked = set(new_idx)
            st.labeled = st.labeled + new_idx
            st.unlabeled = [i for i in st.unlabeled if i not in picked]
            self.iteration += 1
            if cfg.verify_cache and cfg.model == "sketched":
                err = self.cache_error()
                if err > 1e-10:
                    raise AssertionError(f"incremental S K drifted from the full product by {err:.3e}")
            lam, m, mse, scores = self._fit_and_score()
            self._record(lam, m, mse, t0)
        return st.history


def run_active_learning(master: Dataset, test: Dataset, config: ActiveLearningConfig) -> list:
    return ActiveLearner(master, test, config).run()


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for rec in history:
            w.writerow(rec.row())
