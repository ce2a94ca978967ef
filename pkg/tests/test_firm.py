import numpy as np
import pytest

from nkfirms.firm import (
    FirmEnv,
    Prices,
    bellman_rhs,
    labor_policy,
    solve_firm_stationary,
    solve_perfect_foresight,
    static_profit,
    thresholds,
)
from nkfirms.stochproc import (
    AR1Spec,
    LognormalSpec,
    MarkovChain,
    lognormal_pdf,
    rouwenhorst,
)
from nkfirms.variants import VariantConfig


def small_env(nu=0.9, mu_c=-2.0, sigma_c=1.5, rho=0.9, sigma_z=0.05, mean=0.0, k=7):
    chain = rouwenhorst(AR1Spec(rho=rho, sigma=sigma_z, mean=mean), k)
    cost = LognormalSpec(mu=mu_c, sigma=sigma_c)
    return FirmEnv(chain=chain, nu=nu, operating_cost=cost, entry_cost=cost)


def degenerate_chain(z: float) -> MarkovChain:
    return MarkovChain(
        log_grid=np.array([np.log(z)]),
        transition=np.array([[1.0]]),
        entrant_dist=np.array([1.0]),
    )


class TestLaborPolicy:
    def test_closed_form_point(self):
        # z=2, p=1, w=1, nu=0.5: n = (1/(0.5*2))^(1/(0.5-1)) = 1, profit = 2*1 - 1 = 1
        assert labor_policy(2.0, 1.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-14)
        assert static_profit(2.0, 1.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-14)

    def test_vanishes_as_wage_explodes(self):
        assert labor_policy(2.0, 1.0, 1e8, 0.9) < 1e-60

    @pytest.mark.parametrize("z,p,w,nu", [(2.0, 1.0, 1.0, 0.5), (1.3, 0.83, 1.1, 0.9), (0.4, 2.0, 0.7, 0.3)])
    def test_first_order_optimality(self, z, p, w, nu):
        n_star = labor_policy(z, p, w, nu)
        profit = lambda n: p * z * n**nu - w * n
        for bump in (1e-3, -1e-3):
            assert profit(n_star * (1 + bump)) < profit(n_star)

    def test_increasing_in_z(self):
        n = labor_policy(np.array([0.5, 1.0, 2.0]), 1.0, 1.0, 0.9)
        assert np.all(np.diff(n) > 0)


class TestThresholds:
    def test_zero_value(self):
        env = small_env()
        cstar, estar = thresholds(np.zeros(env.chain.k), 0.99, env.chain)
        assert np.all(cstar == 0.0) and np.all(estar == 0.0)

    def test_zero_discount(self):
        env = small_env()
        cstar, _ = thresholds(np.ones(env.chain.k), 0.0, env.chain)
        assert np.all(cstar == 0.0)

    def test_two_state_hand_instance(self):
        chain = rouwenhorst(AR1Spec(rho=0.6, sigma=0.1), k=2)
        V = np.array([1.0, 2.0])
        cstar, estar = thresholds(V, 0.99, chain)
        np.testing.assert_allclose(cstar, [0.99 * (0.8 + 0.2 * 2), 0.99 * (0.2 + 0.8 * 2)], atol=1e-14)
        np.testing.assert_allclose(estar, V, atol=0)

    def test_delayed_entry_threshold(self):
        env = small_env()
        V = np.linspace(1.0, 3.0, env.chain.k)
        cstar, estar = thresholds(V, 0.9, env.chain, VariantConfig(delayed_entry=True))
        np.testing.assert_allclose(estar, cstar, atol=0)


class TestStationarySolve:
    def test_degenerate_geometric_sum(self):
        # Single state z=1, operating cost essentially zero: V = profit/(1-beta).
        env = FirmEnv(
            chain=degenerate_chain(1.0),
            nu=0.5,
            operating_cost=LognormalSpec(mu=-30.0, sigma=0.1),
            entry_cost=LognormalSpec(mu=-30.0, sigma=0.1),
        )
        sol = solve_firm_stationary(env, Prices(p=1.0, w=1.0, sdf=0.99))
        assert static_profit(1.0, 1.0, 1.0, 0.5) == pytest.approx(0.25, abs=1e-14)
        assert sol.value[0] == pytest.approx(25.0, abs=1e-4)

    def test_value_monotone_in_z(self):
        env = small_env()
        sol = solve_firm_stationary(env, Prices(p=0.83, w=1.0, sdf=0.99))
        assert np.all(np.diff(sol.value) >= -1e-12)
        assert np.all(np.diff(sol.labor) > 0)

    def test_bellman_residual_and_threshold_consistency(self):
        env = small_env()
        prices = Prices(p=0.83, w=1.0, sdf=0.99)
        sol = solve_firm_stationary(env, prices)
        resid = bellman_rhs(env, prices, sol.value) - sol.value
        assert np.max(np.abs(resid)) < 1e-9
        cstar, estar = thresholds(sol.value, prices.sdf, env.chain)
        np.testing.assert_array_equal(cstar, sol.cont_threshold)
        np.testing.assert_array_equal(estar, sol.entry_threshold)

    def test_contraction_after_burn_in(self):
        env = small_env()
        prices = Prices(p=0.83, w=1.0, sdf=0.99)
        V = np.zeros(env.chain.k)
        dists = []
        for _ in range(200):
            V_new = bellman_rhs(env, prices, V)
            dists.append(np.max(np.abs(V_new - V)))
            V = V_new
            if dists[-1] < 1e-11:  # stop before float noise dominates
                break
        assert all(d2 < d1 for d1, d2 in zip(dists[5:-1], dists[6:]))
        # asymptotic modulus bounded by sdf * max survival
        sol = solve_firm_stationary(env, prices)
        modulus = prices.sdf * sol.survival.max()
        assert dists[-1] / dists[-2] < modulus + 1e-6

    def test_value_comparative_statics(self):
        env = small_env()
        base = solve_firm_stationary(env, Prices(p=0.83, w=1.0, sdf=0.99))
        higher_p = solve_firm_stationary(env, Prices(p=0.85, w=1.0, sdf=0.99))
        higher_w = solve_firm_stationary(env, Prices(p=0.83, w=1.02, sdf=0.99))
        assert np.all(higher_p.value > base.value)
        assert np.all(higher_w.value < base.value)

    def test_exit_probability_comparative_statics(self):
        # Exit probability falls with p, rises with w, rises when sdf falls.
        env = small_env()
        base = solve_firm_stationary(env, Prices(p=0.83, w=1.0, sdf=0.99))
        exit_base = 1.0 - base.survival
        exit_p = 1.0 - solve_firm_stationary(env, Prices(p=0.85, w=1.0, sdf=0.99)).survival
        exit_w = 1.0 - solve_firm_stationary(env, Prices(p=0.83, w=1.02, sdf=0.99)).survival
        exit_r = 1.0 - solve_firm_stationary(env, Prices(p=0.83, w=1.0, sdf=0.98)).survival
        assert np.all(exit_p < exit_base)
        assert np.all(exit_w > exit_base)
        assert np.all(exit_r > exit_base)


class TestPerfectForesight:
    def test_constant_path_is_fixed_point(self):
        env = small_env()
        prices = Prices(p=0.83, w=1.0, sdf=0.99)
        stat = solve_firm_stationary(env, prices)
        path = solve_perfect_foresight(env, [prices] * 12, stat)
        for sol in path:
            np.testing.assert_allclose(sol.value, stat.value, rtol=1e-10)
            np.testing.assert_allclose(sol.survival, stat.survival, rtol=1e-10)

    def test_higher_rate_raises_exit_probabilities(self):
        env = small_env()
        prices = Prices(p=0.83, w=1.0, sdf=0.99)
        stat = solve_firm_stationary(env, prices)
        tight = [Prices(p=0.83, w=1.0, sdf=0.99 * np.exp(-0.01 * 0.5**t)) for t in range(40)]
        path = solve_perfect_foresight(env, tight, stat)
        assert np.all(path[0].survival <= stat.survival + 1e-15)
        assert np.any(path[0].survival < stat.survival)

    def test_two_period_against_cost_quadrature(self):
        # Brute-force oracle: integrate the continuation option over the cost
        # density on a fine grid instead of using the closed form.
        env = small_env(k=3)
        p0 = Prices(p=0.83, w=1.0, sdf=0.99)
        p1 = Prices(p=0.80, w=0.97, sdf=0.985)
        stat = solve_firm_stationary(env, p0)
        path = solve_perfect_foresight(env, [p1, p0], stat)

        z = env.chain.levels
        V2 = stat.value  # date-2 value = terminal
        c_grid = np.linspace(1e-9, 60.0, 4_000_001)
        dens = lognormal_pdf(env.operating_cost, c_grid)

        def brute_value(prices, V_next):
            cont = prices.sdf * env.chain.transition @ V_next
            out = np.empty_like(cont)
            for i, cv in enumerate(cont):
                gain = np.maximum(cv - c_grid, 0.0)
                out[i] = np.trapezoid(gain * dens, c_grid)
            return static_profit(z, prices.p, prices.w, env.nu) + out

        V1_oracle = brute_value(p0, V2)
        V0_oracle = brute_value(p1, V1_oracle)
        np.testing.assert_allclose(path[1].value, V1_oracle, rtol=2e-6)
        np.testing.assert_allclose(path[0].value, V0_oracle, rtol=2e-6)

    def test_empty_path_rejected(self):
        env = small_env()
        stat = solve_firm_stationary(env, Prices(p=0.83, w=1.0, sdf=0.99))
        with pytest.raises(ValueError):
            solve_perfect_foresight(env, [], stat)
