import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavess.basis import BasisSpec, TensorIndex, build_basis
from wavess.design import gen_data, make_midpoint_grid
from wavess.funcspace import AnisoSmoothness, CoefficientField
from wavess.gram import build_matrices
from wavess.posterior import (
    ChainDraws,
    DiagnosticsConfig,
    GibbsConfig,
    PriorConfig,
    default_truncation,
    event_diagnostics,
    exact_posterior_small,
    l2_error,
    posterior_derivative_mean,
    posterior_mean_field,
    quasi_wn_posterior,
    run_chain,
    sup_error,
    weight,
)


@pytest.fixture(scope="module")
def haar():
    return build_basis(BasisSpec(family="haar", base_level=(1,)))


@pytest.fixture(scope="module")
def small_problem(haar):
    N, J = (1,), (3,)
    design = make_midpoint_grid(64, 1)
    truth = CoefficientField.zero(N, J)
    truth.set(TensorIndex((0,), (0,)), 0.6)
    truth.set(TensorIndex((1,), (1,)), 0.5)
    rng = np.random.default_rng(8)
    prior = PriorConfig(slab="gaussian", tau=2.0, sigma_fixed=1.0)
    ds = gen_data(truth, haar, design, 1.0, rng)
    M = build_matrices(haar, N, J, design)
    return ds, M, prior, truth


def test_prior_validation():
    with pytest.raises(ValueError):
        PriorConfig(slab="cauchy")
    with pytest.raises(ValueError):
        PriorConfig(weight_mu=(0.5,))
    with pytest.raises(ValueError):
        PriorConfig(truncation_exponent=0.0)
    p = PriorConfig()
    assert p.tau == p.R0  # gaussian slab sd defaults to the slab range


def test_slab_density_bounds():
    p = PriorConfig(slab="uniform", R0=2.0)
    assert p.p_min == pytest.approx(0.25)
    assert p.p_max == pytest.approx(0.25)
    g = PriorConfig(slab="gaussian", tau=1.0)
    assert g.p_max == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert g.p_min < g.p_max


def test_weight_schedule():
    prior = PriorConfig(weight_lambda=10.0, weight_mu=(1.0,))
    # 2^{-j(1+mu)} capped at 1/2
    assert weight((0,), 100, prior) == 0.5
    assert weight((2,), 100, prior) == pytest.approx(2.0 ** -4)
    # floored at n^{-lambda}
    assert weight((50,), 10, prior) == pytest.approx(10.0 ** -10)
    # tensor levels add exponents
    prior2 = PriorConfig(weight_mu=(1.0, 2.0))
    assert weight((1, 1), 100, prior2) == pytest.approx(2.0 ** -5)


def test_default_truncation():
    # prod 2^{J_l} is the largest 2-power at most (n/ln n)^{1/2}
    n = 1024
    target = (n / math.log(n)) ** 0.5
    J = default_truncation(n, 1)
    assert 2 ** J[0] <= target < 2 ** (J[0] + 1)
    J2 = default_truncation(n, 2)
    assert sum(J2) == J[0]
    assert J2[0] >= J2[1]
    with pytest.raises(ValueError):
        default_truncation(4, 1)


def test_chain_reproducibility(small_problem):
    ds, M, prior, _ = small_problem
    cfg = GibbsConfig(iters=50, burnin=10)
    d1 = run_chain(ds, M, prior, cfg, np.random.default_rng(5))
    d2 = run_chain(ds, M, prior, cfg, np.random.default_rng(5))
    np.testing.assert_array_equal(d1.theta, d2.theta)
    np.testing.assert_array_equal(d1.sigma2, d2.sigma2)


def test_fathers_always_included(small_problem):
    ds, M, prior, _ = small_problem
    draws = run_chain(ds, M, prior, GibbsConfig(iters=100, burnin=20),
                      np.random.default_rng(2))
    freq = draws.inclusion_frequency()
    father_cols = [i for i, idx in enumerate(M.index_order)
                   if idx.j == (0,)]
    assert all(freq[i] > 0.99 for i in father_cols)


def test_gibbs_matches_enumeration(small_problem):
    ds, M, prior, _ = small_problem
    exact = exact_posterior_small(ds, M, prior, "fixed")
    draws = run_chain(ds, M, prior, GibbsConfig(iters=6000, burnin=500),
                      np.random.default_rng(11))
    freq = draws.inclusion_frequency()
    gaps = np.abs(freq[exact.mother_idx] - exact.inclusion_prob)
    assert np.max(gaps) < 0.04
    assert np.max(np.abs(draws.theta.mean(axis=0)
                         - exact.mean_coeffs)) < 0.04


def test_enumeration_model_probs_normalize(small_problem):
    ds, M, prior, _ = small_problem
    exact = exact_posterior_small(ds, M, prior, "fixed")
    assert sum(exact.model_probs.values()) == pytest.approx(1.0)
    assert np.all(exact.inclusion_prob >= 0)
    assert np.all(exact.inclusion_prob <= 1)


def test_enumeration_sigma_grid(small_problem):
    ds, M, prior, _ = small_problem
    prior_free = PriorConfig(slab="gaussian", tau=2.0)
    grid = np.linspace(0.5, 2.0, 31)
    exact = exact_posterior_small(ds, M, prior_free, "grid", grid)
    fixed = exact_posterior_small(ds, M, prior, "fixed")
    # averaging over sigma should stay in the same neighbourhood
    assert np.max(np.abs(exact.inclusion_prob - fixed.inclusion_prob)) < 0.3


def test_enumeration_caps_k(haar):
    design = make_midpoint_grid(64, 1)
    M = build_matrices(haar, (1,), (5,), design)
    truth = CoefficientField.zero((1,), (5,))
    ds = gen_data(truth, haar, design, 1.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        exact_posterior_small(
            ds, M, PriorConfig(sigma_fixed=1.0), "fixed")


def test_qwn_exact_on_orthogonal(small_problem):
    ds, M, prior, _ = small_problem
    exact = exact_posterior_small(ds, M, prior, "fixed")
    qwn = quasi_wn_posterior(ds, M, prior)
    for c, i in enumerate(exact.mother_idx):
        idx = M.index_order[i]
        assert abs(qwn[idx]["inclusion"]
                   - exact.inclusion_prob[c]) < 1e-10
        assert abs(qwn[idx]["mean"] - exact.mean_coeffs[i]) < 1e-10


def test_nongaussian_slabs_run(small_problem):
    ds, M, _, _ = small_problem
    for slab in ("uniform", "laplace"):
        prior = PriorConfig(slab=slab, sigma_fixed=1.0)
        draws = run_chain(ds, M, prior, GibbsConfig(iters=50, burnin=10),
                          np.random.default_rng(4))
        assert draws.kept == 50
        assert np.all(np.abs(draws.theta) <= prior.R0 + 1e-9)


def test_laplace_slab_matches_gaussian_quadrature(small_problem):
    # oracle for the general slab update: numerical integration of the
    # Bayes factor on a dense grid
    from wavess.posterior import _slab_update_general

    prior = PriorConfig(slab="laplace", laplace_scale=1.0, sigma_fixed=1.0)
    s, b, sigma2 = 40.0, 9.0, 1.0
    bf, _ = _slab_update_general(s, b, sigma2, prior)
    grid = np.linspace(-6, 6, 200001)
    dens = np.exp(prior.slab_logpdf(grid)
                  - (s * grid ** 2 - 2 * b * grid) / (2 * sigma2))
    want = float(np.trapezoid(dens, grid))
    # the Laplace kink at zero limits Gauss-Hermite accuracy to ~1e-4
    assert bf == pytest.approx(want, rel=1e-3)


def test_sigma_update_centers_on_truth(haar):
    N, J = (1,), (3,)
    design = make_midpoint_grid(512, 1)
    truth = CoefficientField.zero(N, J)
    ds = gen_data(truth, haar, design, 0.7, np.random.default_rng(3))
    M = build_matrices(haar, N, J, design)
    prior = PriorConfig()  # free sigma
    draws = run_chain(ds, M, prior, GibbsConfig(iters=400, burnin=100),
                      np.random.default_rng(1))
    med = float(np.median(np.sqrt(draws.sigma2)))
    assert 0.6 < med < 0.8


def test_posterior_mean_and_errors(small_problem, haar):
    ds, M, prior, truth = small_problem
    draws = run_chain(ds, M, prior, GibbsConfig(iters=500, burnin=100),
                      np.random.default_rng(7))
    mean = posterior_mean_field(draws)
    assert sup_error(mean, truth, haar) < 1.0
    assert l2_error(mean, truth, haar, ds) < 1.0
    assert sup_error(truth, truth, haar) == 0.0
    est = posterior_derivative_mean(draws, haar, (0,))
    assert np.isfinite(est((0.3,)))


def test_draw_serialization(small_problem, tmp_path):
    ds, M, prior, _ = small_problem
    draws = run_chain(ds, M, prior, GibbsConfig(iters=20, burnin=5),
                      np.random.default_rng(0))
    p1 = tmp_path / "draws.jsonl"
    p2 = tmp_path / "incl.csv"
    draws.to_jsonl(str(p1))
    draws.inclusion_to_csv(str(p2))
    assert len(p1.read_text().strip().splitlines()) == 20
    assert p2.read_text().startswith("j,k,frequency")


def test_event_diagnostics_clean_truth(small_problem, haar):
    ds, M, prior, truth = small_problem
    draws = run_chain(ds, M, prior, GibbsConfig(iters=300, burnin=100),
                      np.random.default_rng(9))
    out = event_diagnostics(draws, truth, AnisoSmoothness((1.0,)),
                            DiagnosticsConfig(), ds.design.n)
    assert set(out) == {"A_c", "B_c", "C_c", "draws"}
    for key in ("A_c", "B_c", "C_c"):
        assert 0.0 <= out[key] <= 1.0


@given(st.integers(1, 6), st.integers(10, 10 ** 5))
@settings(max_examples=40, deadline=None)
def test_weight_monotone_in_level(j, n):
    prior = PriorConfig()
    assert weight((j,), n, prior) <= weight((j - 1,), n, prior)
    assert weight((j,), n, prior) >= n ** -prior.weight_lambda
