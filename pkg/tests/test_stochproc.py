import numpy as np
import pytest
from scipy.integrate import quad
from scipy.signal import lfilter

from nkfirms.stochproc import (
    AR1Spec,
    LognormalSpec,
    MarkovChain,
    NonConvergenceError,
    binomial_dist,
    chain_stationary,
    expected_cost_gain,
    lognormal_cdf,
    lognormal_pdf,
    quarterly_from_annual,
    rouwenhorst,
    truncated_lognormal_mean,
)

# Quarterly-productivity process implied by the annual employment estimates
# rho_n = 0.9771, sigma_n = 0.2676 at nu = 0.9 (frozen from direct formula
# evaluation, see test_quarterly_from_annual_formula).
RHO_Q = 0.9942161
SIGMA_Q = 0.0134966


def simulate_chain(chain: MarkovChain, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cum = np.cumsum(chain.transition, axis=1)
    draws = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    s = chain.k // 2
    for t in range(n):
        s = int(np.searchsorted(cum[s], draws[t]))
        states[t] = s
    return chain.log_grid[states]


def fitted_ar1(x: np.ndarray) -> float:
    y, ylag = x[1:], x[:-1]
    y = y - y.mean()
    ylag = ylag - ylag.mean()
    return float(y @ ylag / (ylag @ ylag))


class TestRouwenhorst:
    def test_base_case_two_states(self):
        # p = q = (1 + rho)/2 = 0.8 for rho = 0.6
        chain = rouwenhorst(AR1Spec(rho=0.6, sigma=0.1), k=2)
        np.testing.assert_allclose(chain.transition, [[0.8, 0.2], [0.2, 0.8]], atol=1e-15)

    def test_zero_persistence_rows_are_binomial(self):
        chain = rouwenhorst(AR1Spec(rho=0.0, sigma=0.3, mean=1.0), k=3)
        for row in chain.transition:
            np.testing.assert_allclose(row, [0.25, 0.5, 0.25], atol=1e-15)

    @pytest.mark.parametrize("k", range(2, 51))
    def test_rows_sum_to_one(self, k):
        chain = rouwenhorst(AR1Spec(rho=0.95, sigma=0.02, mean=0.4), k)
        assert np.max(np.abs(chain.transition.sum(axis=1) - 1.0)) < 1e-12

    def test_grid_span_and_spacing(self):
        spec = AR1Spec(rho=RHO_Q, sigma=SIGMA_Q, mean=0.439)
        chain = rouwenhorst(spec, k=50)
        span = spec.sigma_uncond * np.sqrt(49.0)
        assert chain.log_grid[0] == pytest.approx(0.439 - span, abs=1e-14)
        assert chain.log_grid[-1] == pytest.approx(0.439 + span, abs=1e-14)
        steps = np.diff(chain.log_grid)
        np.testing.assert_allclose(steps, steps[0], rtol=1e-12)

    def test_conditional_autocorrelation_is_exact(self):
        # Cov(x, E[x'|x]) / Var(x) under the stationary distribution equals rho.
        spec = AR1Spec(rho=0.87, sigma=0.05, mean=-0.2)
        chain = rouwenhorst(spec, k=9)
        pi = binomial_dist(9)
        g = chain.log_grid
        m = pi @ g
        cond_mean = chain.transition @ g
        rho_implied = pi @ ((g - m) * (cond_mean - m)) / (pi @ (g - m) ** 2)
        assert rho_implied == pytest.approx(0.87, abs=1e-13)

    def test_simulated_autocorrelation_matches_target(self):
        chain = rouwenhorst(AR1Spec(rho=RHO_Q, sigma=SIGMA_Q, mean=0.439), k=50)
        path = simulate_chain(chain, n=1_200_000, seed=20_240_612)
        assert fitted_ar1(path) == pytest.approx(RHO_Q, abs=1e-3)

    def test_entrant_dist_is_stationary_binomial(self):
        chain = rouwenhorst(AR1Spec(rho=RHO_Q, sigma=SIGMA_Q, mean=0.439), k=50)
        np.testing.assert_allclose(chain.entrant_dist, binomial_dist(50), atol=1e-15)
        np.testing.assert_allclose(chain_stationary(chain.transition), binomial_dist(50), atol=1e-10)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            rouwenhorst(AR1Spec(rho=0.5, sigma=0.1), k=1)
        with pytest.raises(ValueError):
            AR1Spec(rho=1.0, sigma=0.1)
        with pytest.raises(ValueError):
            AR1Spec(rho=0.5, sigma=0.0)


class TestChainStationary:
    def test_symmetric_two_state(self):
        chain = rouwenhorst(AR1Spec(rho=0.6, sigma=0.1), k=2)
        np.testing.assert_allclose(chain_stationary(chain.transition), [0.5, 0.5], atol=1e-12)

    def test_three_state_binomial(self):
        chain = rouwenhorst(AR1Spec(rho=0.3, sigma=0.2), k=3)
        np.testing.assert_allclose(chain_stationary(chain.transition), [0.25, 0.5, 0.25], atol=1e-12)

    def test_arbitrary_chain_against_nullspace_oracle(self):
        rng = np.random.default_rng(7)
        P = rng.random((4, 4))
        P /= P.sum(axis=1, keepdims=True)
        # Independent oracle: solve (P' - I) pi = 0 with the normalization row.
        A = np.vstack([P.T - np.eye(4), np.ones(4)])
        b = np.zeros(5)
        b[-1] = 1.0
        oracle, *_ = np.linalg.lstsq(A, b, rcond=None)
        np.testing.assert_allclose(chain_stationary(P), oracle, atol=1e-10)

    def test_periodic_chain_raises(self):
        # Bipartite chain {0} <-> {1, 2}: power iteration oscillates forever.
        P = np.array([[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with pytest.raises(NonConvergenceError):
            chain_stationary(P, maxiter=500)


class TestQuarterlyFromAnnual:
    def test_formula(self):
        rho_q, sigma_q = quarterly_from_annual(0.9771, 0.2676, 0.9)
        # Direct evaluation: rho_q = 0.9771**0.25, window = sum rho_q**(2j).
        rho_expect = 0.9771**0.25
        window = sum(rho_expect ** (2 * j) for j in range(4))
        sigma_expect = 0.1 * np.sqrt(0.2676**2 / window)
        assert rho_q == pytest.approx(rho_expect, abs=1e-15)
        assert sigma_q == pytest.approx(sigma_expect, abs=1e-15)
        # Five-decimal values used throughout the calibration.
        assert rho_q == pytest.approx(0.99422, abs=1e-5)
        assert sigma_q == pytest.approx(0.01350, abs=1e-5)

    def test_vanishing_persistence_limit(self):
        rho_q, sigma_q = quarterly_from_annual(1e-12, 0.2676, 0.9)
        assert rho_q == pytest.approx(1e-3, rel=1e-12)
        assert sigma_q == pytest.approx(0.1 * 0.2676, rel=1e-5)

    def test_linear_in_nu_distance(self):
        _, sigma_09 = quarterly_from_annual(0.9771, 0.2676, 0.9)
        _, sigma_05 = quarterly_from_annual(0.9771, 0.2676, 0.5)
        assert sigma_05 == pytest.approx(5.0 * sigma_09, rel=1e-13)

    def test_domain_checks(self):
        for args in [(0.0, 0.1, 0.9), (1.0, 0.1, 0.9), (0.9, -1.0, 0.9), (0.9, 0.1, 1.0)]:
            with pytest.raises(ValueError):
                quarterly_from_annual(*args)

    def test_annual_subsampling_roundtrip(self):
        # Simulate the quarterly process, keep every 4th observation, and check
        # the annual-frequency persistence comes back.
        rho_q, sigma_q = quarterly_from_annual(0.9771, 0.2676, 0.9)
        rng = np.random.default_rng(99)
        n = 4_400_000
        eps = rng.normal(0.0, sigma_q, size=n)
        x = lfilter([1.0], [1.0, -rho_q], eps)
        annual = x[400_000::4]
        assert fitted_ar1(annual) == pytest.approx(0.9771, abs=2e-3)


class TestLognormal:
    def test_cdf_median(self):
        spec = LognormalSpec(mu=-6.216, sigma=4.537)
        assert lognormal_cdf(spec, np.exp(-6.216)) == pytest.approx(0.5, abs=1e-15)

    def test_cdf_nonpositive_support(self):
        spec = LognormalSpec(mu=0.0, sigma=1.0)
        assert lognormal_cdf(spec, 0.0) == 0.0
        assert lognormal_cdf(spec, -3.0) == 0.0

    def test_cdf_against_quadrature(self):
        # Integrate the density of ln x (substitution x = e^u) so the oracle
        # itself is accurate beyond the 1e-10 comparison tolerance.
        mu, sigma = -6.216, 4.537
        normpdf = lambda u: np.exp(-0.5 * ((u - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
        lo = mu - 14 * sigma
        oracle = sum(
            quad(normpdf, a, b, epsabs=1e-14, limit=300)[0] for a, b in [(lo, mu), (mu, 0.0)]
        )
        assert lognormal_cdf(LognormalSpec(mu, sigma), 1.0) == pytest.approx(oracle, abs=1e-10)

    def test_truncated_mean_untruncated_limit(self):
        spec = LognormalSpec(mu=0.0, sigma=1.0)
        assert truncated_lognormal_mean(spec, 1e12) == pytest.approx(np.exp(0.5), rel=1e-9)
        assert truncated_lognormal_mean(spec, np.exp(0.0 + 8.0)) == pytest.approx(np.exp(0.5), rel=1e-6)

    def test_truncated_mean_against_quadrature(self):
        spec = LognormalSpec(mu=0.0, sigma=1.0)
        num, _ = quad(lambda t: t * lognormal_pdf(spec, t), 0.0, 1.0, limit=300)
        den, _ = quad(lambda t: lognormal_pdf(spec, t), 0.0, 1.0, limit=300)
        oracle = num / den
        assert truncated_lognormal_mean(spec, 1.0) == pytest.approx(oracle, abs=1e-10)
        assert truncated_lognormal_mean(spec, 1.0) == pytest.approx(0.5231566, abs=1e-6)

    def test_truncated_mean_monotone_and_bounded(self):
        spec = LognormalSpec(mu=-1.3, sigma=2.1)
        caps = np.exp(np.linspace(-1.3 - 10 * 2.1, -1.3 + 8 * 2.1, 60))
        means = truncated_lognormal_mean(spec, caps)
        assert np.all(np.diff(means) > 0)
        assert np.all(means < caps)
        assert means[0] < caps[0]  # deep-tail cap still dominated

    def test_truncated_mean_rejects_nonpositive_cap(self):
        with pytest.raises(ValueError):
            truncated_lognormal_mean(LognormalSpec(0.0, 1.0), 0.0)

    def test_expected_cost_gain_matches_components(self):
        spec = LognormalSpec(mu=-6.216, sigma=4.537)
        caps = np.array([1e-8, 0.03, 1.0, 25.0, 4e3])
        direct = (caps - truncated_lognormal_mean(spec, caps)) * lognormal_cdf(spec, caps)
        np.testing.assert_allclose(expected_cost_gain(spec, caps), direct, rtol=1e-12)
        assert expected_cost_gain(spec, -5.0) == 0.0
        assert expected_cost_gain(spec, 0.0) == 0.0

    def test_expected_cost_gain_derivative_is_cdf(self):
        # d/dcap E[max(cap - x, 0)] = G(cap); central difference oracle.
        spec = LognormalSpec(mu=0.5, sigma=1.7)
        for cap in [0.2, 1.0, 7.0]:
            h = 1e-6 * cap
            fd = (expected_cost_gain(spec, cap + h) - expected_cost_gain(spec, cap - h)) / (2 * h)
            assert fd == pytest.approx(lognormal_cdf(spec, cap), rel=1e-7)

    def test_sigma_floor_rejected(self):
        with pytest.raises(ValueError):
            LognormalSpec(mu=0.0, sigma=0.0)
