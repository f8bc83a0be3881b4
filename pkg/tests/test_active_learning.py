import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sketchvar.active_learning import (
    HISTORY_COLUMNS,
    ActiveLearner,
    ActiveLearningConfig,
    FlopCounter,
    incremental_sk,
    run_active_learning,
    weighted_sample_without_replacement,
    write_history_csv,
)
from sketchvar.experiments import SyntheticSpec, generate


def blocks(rng, n0, ns, m1, dm):
    B = rng.standard_normal((n0 + ns, n0 + ns))
    K = B @ B.T
    S = rng.standard_normal((m1 + dm, n0 + ns))
    return K, S


def assemble(K, S, n0, m1, **kw):
    K1, K12, K21, K2 = K[:n0, :n0], K[:n0, n0:], K[n0:, :n0], K[n0:, n0:]
    return incremental_sk(
        S[:m1, :n0] @ K1, S[:m1, :n0], (K12, K21, K2), (S[:m1, n0:], S[m1:, :n0], S[m1:, n0:]), K1=K1, **kw
    )


def test_empty_update_is_noop():
    rng = np.random.default_rng(0)
    K, S = blocks(rng, 6, 0, 3, 0)
    cache = S @ K
    out = incremental_sk(cache, S, (np.zeros((6, 0)), np.zeros((0, 6)), np.zeros((0, 0))),
                         (np.zeros((3, 0)), np.zeros((0, 6)), np.zeros((0, 0))))
    assert out is cache


def test_zero_sketch_blocks():
    rng = np.random.default_rng(1)
    n0, ns, m = 7, 3, 4
    K, S = blocks(rng, n0, ns, m, 0)
    S[:, n0:] = 0.0
    out = assemble(K, S, n0, m)
    np.testing.assert_allclose(out[:, n0:], S[:, :n0] @ K[:n0, n0:], atol=1e-12)
    np.testing.assert_allclose(out[:, :n0], S[:, :n0] @ K[:n0, :n0], atol=1e-12)


def test_growth_step_matches_full_product():
    rng = np.random.default_rng(2)
    K, S = blocks(rng, 50, 10, 8, 3)
    np.testing.assert_allclose(assemble(K, S, 50, 8), S @ K, atol=1e-10)


def test_scale_applied_to_cache():
    rng = np.random.default_rng(3)
    K, S = blocks(rng, 20, 5, 4, 0)
    old = S[:, :20] / 0.5
    K1 = K[:20, :20]
    out = incremental_sk(old @ K1, S[:, :20], (K[:20, 20:], K[20:, :20], K[20:, 20:]),
                         (S[:, 20:], np.zeros((0, 20)), np.zeros((0, 5))), scale=0.5)
    np.testing.assert_allclose(out, S @ K, atol=1e-10)


def test_shape_errors():
    rng = np.random.default_rng(4)
    K, S = blocks(rng, 6, 2, 3, 1)
    with pytest.raises(ValueError, match="K1"):
        incremental_sk(S[:3, :6] @ K[:6, :6], S[:3, :6], (K[:6, 6:], K[6:, :6], K[6:, 6:]),
                       (S[:3, 6:], S[3:, :6], S[3:, 6:]))
    with pytest.raises(ValueError, match="S12"):
        incremental_sk(S[:3, :6] @ K[:6, :6], S[:3, :6], (K[:6, 6:], K[6:, :6], K[6:, 6:]),
                       (S[:2, 6:], S[3:, :6], S[3:, 6:]), K1=K[:6, :6])


@pytest.mark.parametrize("n0, ns, m", [(100, 30, 5), (400, 30, 9), (1000, 10, 12)])
def test_flops_without_growth_are_linear_in_n0(n0, ns, m):
    rng = np.random.default_rng(5)
    K, S = blocks(rng, n0, ns, m, 0)
    counter = FlopCounter()
    assemble(K, S, n0, m, counter=counter)
    assert counter.total == m * (2 * n0 * ns + ns * ns)
    assert counter.total <= 3 * m * n0 * ns
    assert counter.total < m * n0 * n0


def test_flops_with_growth():
    n0, ns, m1, dm = 200, 30, 6, 2
    rng = np.random.default_rng(6)
    K, S = blocks(rng, n0, ns, m1, dm)
    counter = FlopCounter()
    assemble(K, S, n0, m1, counter=counter)
    assert counter.total == m1 * (2 * n0 * ns + ns * ns) + dm * (n0 + ns) ** 2


def test_sampler_exhaustive_draw():
    b = weighted_sample_without_replacement(np.ones(6), 6, 0)
    assert sorted(b.indices.tolist()) == list(range(6))


def test_sampler_degenerate_mass():
    for seed in range(50):
        assert weighted_sample_without_replacement([1.0, 0.0, 0.0], 1, seed).indices.tolist() == [0]


def test_sampler_frequency():
    rng = np.random.default_rng(123)
    hits = sum(weighted_sample_without_replacement([2.0, 1.0, 1.0], 1, rng).indices[0] == 0 for _ in range(100_000))
    assert 0.49 <= hits / 100_000 <= 0.51


def test_sampler_uniform_chi_square():
    rng = np.random.default_rng(9)
    counts = np.zeros(8)
    for _ in range(40_000):
        counts[weighted_sample_without_replacement(np.ones(8), 1, rng).indices[0]] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_sampler_zero_weights_fall_back_to_uniform():
    b = weighted_sample_without_replacement([0.0, 0.0, 5.0, 0.0], 3, 1)
    assert b.indices[0] == 2 and len(set(b.indices.tolist())) == 3


@pytest.mark.parametrize("weights, n_s", [([1.0, -1.0], 1), ([1.0, np.nan], 1), ([1.0], 2)])
def test_sampler_rejects_bad_input(weights, n_s):
    with pytest.raises(ValueError):
        weighted_sample_without_replacement(weights, n_s, 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30), st.data())
def test_sampler_distinct_property(weights, data):
    n_s = data.draw(st.integers(0, len(weights)))
    b = weighted_sample_without_replacement(weights, n_s, data.draw(st.integers(0, 2**32 - 1)))
    assert len(set(b.indices.tolist())) == n_s
    assert all(0 <= i < len(weights) for i in b.indices)


def _pool(gen="uniform_quadratic", n=600, seed=0):
    return generate(SyntheticSpec(gen, n, 1.0, seed)), generate(SyntheticSpec(gen, 200, 1.0, seed + 10_000))


def test_zero_iterations_records_initial_fit():
    master, test = _pool()
    hist = run_active_learning(master, test, ActiveLearningConfig(iterations=0))
    assert len(hist) == 1 and hist[0].iteration == 0 and hist[0].n_labeled == 100


def test_cache_stays_exact_over_ten_steps():
    master, test = _pool(n=800)
    learner = ActiveLearner(master, test, ActiveLearningConfig(iterations=10, verify_cache=True))
    hist = learner.run()
    assert [h.n_labeled for h in hist] == [100 + 30 * i for i in range(11)]
    assert learner.cache_error() <= 1e-10


@pytest.mark.parametrize("rescale", [True, False])
def test_cache_exact_with_growing_m(rescale):
    master, test = _pool(n=800)
    cfg = ActiveLearningConfig(iterations=6, batch_size=100, m_rule="poly", m_scale=3.0,
                               rescale_on_grow=rescale, verify_cache=True)
    learner = ActiveLearner(master, test, cfg)
    hist = learner.run()
    assert hist[-1].m > hist[0].m
    assert learner.cache_error() <= 1e-10


def test_flop_count_per_step():
    master, test = _pool(n=800)
    learner = ActiveLearner(master, test, ActiveLearningConfig(iterations=10))
    hist = learner.run()
    for i, flops in enumerate(learner.state.step_flops[1:]):
        n0, m_prev, m_next = hist[i].n_labeled, hist[i].m, hist[i + 1].m
        ns = 30
        bound = 3 * m_prev * n0 * ns + (m_next - m_prev) * (n0 + ns) ** 2
        assert flops <= bound
        if m_next == m_prev:
            assert flops < m_prev * n0 * n0


@pytest.mark.parametrize("acq, model", [("v2", "sketched"), ("uniform", "sketched"), ("v1", "exact"), ("uniform", "exact")])
def test_modes_run(acq, model):
    master, test = _pool(n=400)
    hist = run_active_learning(master, test, ActiveLearningConfig(iterations=3, acquisition=acq, model=model, seed=2))
    assert len(hist) == 4
    assert all(np.isfinite(h.test_mse) for h in hist)
    assert all(h.m == 0 for h in hist) == (model == "exact")


def test_exact_v1_with_estimated_sigma():
    master, test = _pool(n=300)
    hist = run_active_learning(master, test, ActiveLearningConfig(iterations=2, acquisition="v1", model="exact",
                                                                  sigma=None))
    assert len(hist) == 3


def test_deterministic_given_seed():
    master, test = _pool(n=400)
    cfg = ActiveLearningConfig(iterations=4, seed=7)
    a = [(h.n_labeled, h.m, h.test_mse) for h in run_active_learning(master, test, cfg)]
    b = [(h.n_labeled, h.m, h.test_mse) for h in run_active_learning(master, test, cfg)]
    assert a == b


def test_pool_exhaustion_truncates():
    master, test = _pool(n=160)
    learner = ActiveLearner(master, test, ActiveLearningConfig(iterations=10))
    hist = learner.run()
    assert learner.state.truncated and hist[-1].n_labeled == 160


def test_early_stop():
    master, test = _pool(n=800)
    cfg = ActiveLearningConfig(iterations=15, early_stop=True, early_stop_tol=1.0)
    hist = run_active_learning(master, test, cfg)
    assert len(hist) == cfg.early_stop_window + 1


@pytest.mark.parametrize("kw", [dict(acquisition="v2", model="exact"), dict(acquisition="v1", model="sketched"),
                                dict(acquisition="max"), dict(initial_size=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ActiveLearningConfig(**kw)


def test_initial_set_larger_than_pool():
    master, test = _pool(n=50)
    with pytest.raises(ValueError):
        ActiveLearner(master, test, ActiveLearningConfig())


def test_history_csv(tmp_path):
    master, test = _pool(n=300)
    hist = run_active_learning(master, test, ActiveLearningConfig(iterations=2))
    path = tmp_path / "h.csv"
    write_history_csv(path, hist)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(HISTORY_COLUMNS) and len(lines) == 4


def test_clustered_v2_beats_uniform_on_average():
    ratios = []
    for seed in range(6):
        master, test = _pool("clustered", n=1000, seed=seed)
        final = {}
        for acq in ("v2", "uniform"):
            cfg = ActiveLearningConfig(iterations=10, acquisition=acq, seed=seed)
            final[acq] = run_active_learning(master, test, cfg)[-1].test_mse
        ratios.append(final["v2"] / final["uniform"])
    assert np.mean(ratios) <= 1.1


def test_acquisition_is_sigma_invariant():
    master, test = _pool("clustered", n=600, seed=3)
    runs = []
    for sigma in (0.5, 1.0, 4.0):
        learner = ActiveLearner(master, test, ActiveLearningConfig(iterations=4, sigma=sigma, seed=3))
        learner.run()
        runs.append(learner.state.labeled)
    assert runs[0] == runs[1] == runs[2]
