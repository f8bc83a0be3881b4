import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchvar.exact_krr import fit, predict_mean, variance_v1
from sketchvar.experiments import SyntheticSpec, default_grid, generate, m_rule
from sketchvar.experiments import test_function as quadratic_truth
from sketchvar.kernels import KernelSpec, build_kernel_matrix, decompose, kernel_sections
from sketchvar.sketch import OversketchWarning, from_entries, generate as generate_sketch, identity_sketch
from sketchvar.sketched_krr import (
    SketchConditioningError,
    gap_diagnostics,
    sketched_fit,
    sketched_predict_mean,
    variance_v2,
    variance_v3,
)


def random_psd(rng, n, lo=1e-2):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(lo, 1.0, n)) @ Q.T


def sobolev_problem(n, seed):
    data = generate(SyntheticSpec("uniform_quadratic", n, 1.0, seed))
    return data, build_kernel_matrix(KernelSpec.sobolev_cubic(), data)


def test_identity_sketch_gives_exact_system():
    rng = np.random.default_rng(0)
    K, y, lam = random_psd(rng, 12), rng.standard_normal(12), 0.2
    sf = sketched_fit(K, identity_sketch(12), lam, y)
    np.testing.assert_allclose(sf.M, lam * K + K @ K, atol=1e-14)
    # alpha solves M alpha = K y / n; then K alpha = K (lam K + K^2)^{-1} K y / n
    np.testing.assert_allclose(sf.M @ sf.alpha, K @ y / 12, atol=1e-12)


def test_isotropic_kernel():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    c, lam = 0.7, 0.3
    sf = sketched_fit(c * np.eye(8), from_entries(Q[:3]), lam)
    np.testing.assert_allclose(sf.M, (lam * c + c**2) * np.eye(3), atol=1e-14)


def test_m_matches_naive_assembly():
    rng = np.random.default_rng(2)
    K = random_psd(rng, 60)
    S = generate_sketch("gaussian", 3, 20, 60)
    E = S.entries
    naive = 0.1 * E @ K @ E.T + E @ (K @ K) @ E.T
    np.testing.assert_allclose(sketched_fit(K, S, 0.1).M, naive, atol=1e-9)


def test_input_validation():
    K = np.eye(4)
    with pytest.raises(ValueError):
        sketched_fit(K, generate_sketch("gaussian", 0, 2, 5), 1.0)
    with pytest.raises(ValueError):
        sketched_fit(K, generate_sketch("gaussian", 0, 2, 4), 0.0)
    with pytest.warns(OversketchWarning):
        sketched_fit(K, from_entries(np.vstack([np.eye(4), np.ones((1, 4))])), 1.0, max_condition=np.inf)


def test_conditioning_error_names_cause():
    K = np.diag([1.0, 1e-14, 0.0, 0.0])
    with pytest.raises(SketchConditioningError, match="m=.*lambda"):
        sketched_fit(K, from_entries(np.eye(4)[:3]), 1e-6)


def test_disabled_probe_uses_pseudo_inverse():
    K = np.diag([1.0, 0.0, 0.0])
    sf = sketched_fit(K, identity_sketch(3), 0.5, max_condition=np.inf)
    assert np.all(np.isfinite(sf.solve(np.ones(3))))


@pytest.mark.parametrize("seed", range(5))
def test_invertible_sketch_v2_equals_v1(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 40))
    K, lam = random_psd(rng, n), float(rng.uniform(0.1, 1.0))
    S = generate_sketch("gaussian", seed, n, n)
    ks = rng.standard_normal((10, n))
    v1 = variance_v1(fit(K, np.zeros(n), lam), ks, 1.3)
    v2 = variance_v2(sketched_fit(K, S, lam), ks, 1.3)
    np.testing.assert_allclose(v2, v1, rtol=1e-8)


def test_zero_section():
    sf = sketched_fit(np.eye(5), generate_sketch("gaussian", 0, 2, 5), 1.0)
    assert variance_v2(sf, np.zeros(5), 1.0) == 0.0
    assert variance_v3(sf, None, np.zeros(5), 1.0) == 0.0


def test_v2_uniformly_close_on_sobolev():
    consts = []
    for seed in range(5):
        n = 200
        data, K = sobolev_problem(n, seed)
        lam = n ** -0.8
        grid = np.linspace(0, 1, 50)
        ks = kernel_sections(KernelSpec.sobolev_cubic(), data.inputs, grid)
        v1 = variance_v1(fit(K, data.responses, lam), ks, 1.0)
        S = generate_sketch("gaussian", seed, m_rule("poly", n), n)
        v2 = variance_v2(sketched_fit(K, S, lam), ks, 1.0)
        consts.append(np.abs(v1 - v2).max() * n * lam)
    assert max(consts) < 1.0
    assert max(consts) / max(min(consts), 1e-300) < 1e3


def test_v3_identity_dense_formula():
    rng = np.random.default_rng(7)
    n, lam, sigma = 15, 0.2, 0.8
    K = random_psd(rng, n)
    k = rng.standard_normal(n)
    B = np.linalg.inv(lam * K + K @ K)
    expected = sigma**2 / n**2 * k @ K @ B @ K @ K @ B @ K @ k
    got = variance_v3(sketched_fit(K, identity_sketch(n), lam), identity_sketch(n), k, sigma)
    assert got == pytest.approx(expected, rel=1e-9)


def test_v3_scalar():
    sf = sketched_fit([[1.0]], identity_sketch(1), 1.0)
    assert variance_v3(sf, identity_sketch(1), [1.0], 1.0) == pytest.approx(0.25)


def test_v3_rejects_foreign_sketch():
    sf = sketched_fit(np.eye(4), generate_sketch("gaussian", 0, 2, 4), 1.0)
    with pytest.raises(ValueError):
        variance_v3(sf, generate_sketch("gaussian", 0, 3, 4), np.ones(4), 1.0)


def test_sketched_mean_identity_matches_exact():
    rng = np.random.default_rng(8)
    K, y, lam = random_psd(rng, 20), rng.standard_normal(20), 0.05
    ks = rng.standard_normal((6, 20))
    sf = sketched_fit(K, identity_sketch(20), lam)
    np.testing.assert_allclose(sketched_predict_mean(sf, None, y, ks), predict_mean(fit(K, y, lam), ks), atol=1e-8)


def test_sketched_mean_zero_response():
    sf = sketched_fit(np.eye(4), generate_sketch("gaussian", 0, 2, 4), 1.0)
    assert sketched_predict_mean(sf, None, np.zeros(4), np.ones(4)) == 0.0


def test_sketched_mean_test_mse():
    n = 500
    data = generate(SyntheticSpec("uniform_quadratic", n, 1.0, 0))
    kernel = KernelSpec.gaussian(0.25)
    K = build_kernel_matrix(kernel, data)
    lam = np.sqrt(np.log(n)) / n
    grid = np.linspace(0, 1, 200)
    ks = kernel_sections(kernel, data.inputs, grid)
    truth = quadratic_truth(grid)
    exact = np.mean((predict_mean(fit(K, data.responses, lam), ks) - truth) ** 2)
    sf = sketched_fit(K, generate_sketch("gaussian", 1, int(np.ceil(np.log(n))), n), lam, max_condition=np.inf)
    sketched = np.mean((sketched_predict_mean(sf, None, data.responses, ks) - truth) ** 2)
    assert sketched <= 1.5 * exact


def test_t1_large_lambda_limit():
    rng = np.random.default_rng(9)
    K = random_psd(rng, 10)
    lam = 1e6 * np.linalg.eigvalsh(K)[-1]
    g = rng.standard_normal(10)
    d = gap_diagnostics(K, decompose(K), generate_sketch("gaussian", 0, 4, 10), lam, g)
    assert d.T1 == pytest.approx(np.linalg.norm(g) / np.sqrt(10), rel=1e-5)


def test_t2_equals_t1_for_identity():
    rng = np.random.default_rng(10)
    K = random_psd(rng, 12)
    ds = gap_diagnostics(K, decompose(K), identity_sketch(12), 0.05, rng.standard_normal((3, 12)))
    assert len(ds) == 3
    for d in ds:
        assert d.T2 == pytest.approx(d.T1, rel=1e-9)


def test_ratios_bounded_on_sobolev():
    n, lam = 400, 400 ** -0.8
    m = m_rule("poly", n)
    grid = default_grid(50)
    worst = 0.0
    for seed in range(30):
        data, K = sobolev_problem(n, seed)
        ks = kernel_sections(KernelSpec.sobolev_cubic(), data.inputs, grid)
        for d in gap_diagnostics(K, decompose(K), generate_sketch("gaussian", seed, m, n), lam, ks):
            worst = max(worst, d.ratio1, d.ratio2)
    assert worst <= 10


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 20), st.integers(1, 20), st.floats(0.05, 2.0), st.integers(0, 10_000))
def test_v2_dominates_v1(n, m, lam, seed):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    K = random_psd(rng, n, lo=0.05)
    k = rng.standard_normal(n)
    v1 = variance_v1(fit(K, np.zeros(n), lam), k, 1.0)
    v2 = variance_v2(sketched_fit(K, generate_sketch("gaussian", seed, m, n), lam), k, 1.0)
    # the sketch projects onto a subspace, so it can only shrink the correction term
    assert v2 >= v1 * (1 - 1e-8)
