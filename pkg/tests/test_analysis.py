import numpy as np
import pytest

from nkfirms import analysis
from nkfirms.dynamics import impulse_response, solve_model
from nkfirms.equilibrium import FirmMeasure
from nkfirms.rfmodel import RFParams, rf_irf, solve_rf


@pytest.fixture(scope="module")
def model(baseline_ss):
    return solve_model(baseline_ss)


@pytest.fixture(scope="module")
def hf_irf(model):
    return impulse_response(model, horizon=200)


@pytest.fixture(scope="module")
def rf_benchmark(baseline_ss):
    p = baseline_ss.params
    rfp = RFParams(beta=p.beta, sigma=p.sigma, kappa1=p.kappa1, nu=p.nu,
                   gamma=p.gamma, xi=p.xi, phi=p.phi, rho_m=p.rho_m)
    return rf_irf(solve_rf(rfp), rfp, horizon=200)


@pytest.fixture(scope="module")
def contributions(hf_irf, baseline_ss):
    return analysis.price_contributions(hf_irf, baseline_ss)


class TestMeasureRates:
    def test_stationary_inputs_give_constant_rates(self, baseline_ss):
        path = [baseline_ss.measure] * 6
        sols = [baseline_ss.firm] * 6
        rates = analysis.measure_rates(path, sols, baseline_ss.measure.entrant_scale, baseline_ss.env.chain)
        np.testing.assert_allclose(rates.exit_rate, rates.exit_rate[0], rtol=1e-12)
        np.testing.assert_allclose(rates.exit_rate_bp, 0.0, atol=1e-9)
        # stationary quarterly rate consistent with the annualized 8.6% target
        annual = 1.0 - (1.0 - rates.exit_rate[0]) ** 4
        assert annual == pytest.approx(0.086, abs=0.01)

    def test_zero_entry_probability(self, baseline_ss):
        from nkfirms.firm import FirmSolution

        sol = FirmSolution(
            value=baseline_ss.firm.value,
            labor=baseline_ss.firm.labor,
            cont_threshold=baseline_ss.firm.cont_threshold,
            entry_threshold=baseline_ss.firm.entry_threshold,
            survival=baseline_ss.firm.survival,
            entry_prob=np.zeros(baseline_ss.env.chain.k),
        )
        rates = analysis.measure_rates(
            [baseline_ss.measure] * 3, [sol] * 3, baseline_ss.measure.entrant_scale, baseline_ss.env.chain
        )
        assert np.all(rates.entry_rate == 0.0)

    def test_hand_built_two_point_path(self, baseline_ss):
        chain = baseline_ss.env.chain
        sol = baseline_ss.firm
        m0 = baseline_ss.measure
        m1 = FirmMeasure(mass=1.1 * m0.mass, entrant_scale=m0.entrant_scale)
        rates = analysis.measure_rates([m0, m1], [sol, sol], m0.entrant_scale, chain)
        exit0 = (1.0 - sol.survival) @ m0.mass / (0.5 * (m0.total + m1.total))
        entry1 = m0.entrant_scale * sol.entry_prob @ chain.entrant_dist / (0.5 * (m0.total + m1.total))
        assert rates.exit_rate[0] == pytest.approx(exit0, rel=1e-14)
        assert rates.entry_rate[1] == pytest.approx(entry1, rel=1e-14)

    def test_recomputation_is_exact_algebra(self, baseline_ss):
        path = [baseline_ss.measure] * 4
        sols = [baseline_ss.firm] * 4
        r1 = analysis.measure_rates(path, sols, baseline_ss.measure.entrant_scale, baseline_ss.env.chain)
        r2 = analysis.measure_rates(path, sols, baseline_ss.measure.entrant_scale, baseline_ss.env.chain)
        np.testing.assert_array_equal(r1.exit_rate, r2.exit_rate)
        np.testing.assert_array_equal(
            r1.exit_rate, r1.exit_mass / (0.5 * (r1.gamma + np.append(r1.gamma[1:], r1.gamma[-1])))
        )


class TestTfpPath:
    def test_stationary_constant(self, baseline_ss):
        tp = analysis.tfp_path([baseline_ss.measure] * 5, baseline_ss.env.chain, 0.9)
        np.testing.assert_allclose(tp.tfp, tp.tfp[0], rtol=1e-14)
        assert tp.tfp[0] == pytest.approx(baseline_ss.aggregates.tfp, rel=1e-12)

    def test_identity_holds_exactly(self, baseline_ss, model, hf_irf):
        masses = analysis.irf_mass_path(model, hf_irf)[:50]
        path = [FirmMeasure(mass=m, entrant_scale=baseline_ss.measure.entrant_scale) for m in masses]
        tp = analysis.tfp_path(path, baseline_ss.env.chain, baseline_ss.params.nu)
        np.testing.assert_allclose(tp.identity_residual(baseline_ss.params.nu), 0.0, atol=1e-12)

    def test_contractionary_shock_moves_components_oppositely(self, baseline_ss, model, hf_irf):
        masses = analysis.irf_mass_path(model, hf_irf)[:40]
        path = [FirmMeasure(mass=m, entrant_scale=baseline_ss.measure.entrant_scale) for m in masses]
        tp = analysis.tfp_path(path, baseline_ss.env.chain, baseline_ss.params.nu)
        A_ss = baseline_ss.aggregates.tfp
        # TFP falls on impact while the per-firm productivity aggregate rises.
        assert tp.tfp[0] < A_ss and tp.tfp[4] < A_ss
        stat_aggregate = (A_ss ** (1.0 / (1.0 - baseline_ss.params.nu))) / baseline_ss.measure.total
        assert tp.productivity_aggregate[0] > stat_aggregate
        assert tp.productivity_aggregate[4] > stat_aggregate

    def test_homogeneity_in_scale(self, baseline_ss):
        m2 = FirmMeasure(mass=2.0 * baseline_ss.measure.mass, entrant_scale=baseline_ss.measure.entrant_scale)
        tp = analysis.tfp_path([baseline_ss.measure, m2], baseline_ss.env.chain, 0.9)
        assert tp.tfp[1] == pytest.approx(2.0**0.1 * tp.tfp[0], rel=1e-12)


class TestPriceContributions:
    def test_signs_and_shares(self, contributions):
        assert contributions["w"].exit_rate_bp[0] < 0.0 < contributions["p"].exit_rate_bp[0]
        total = contributions["all"].exit_rate_bp[0]
        assert contributions["r"].exit_rate_bp[0] / total >= 0.7
        assert total > 0.0

    def test_all_prices_close_to_equilibrium_rates(self, contributions, hf_irf):
        assert contributions["all"].exit_rate_bp[0] == pytest.approx(
            hf_irf.series["exit_rate_bp"][0], rel=0.05
        )

    def test_small_scale_convergence_to_linear(self, model, baseline_ss):
        # Nonlinear perfect-foresight rates converge to the linearized IRF
        # rates as the shock scale shrinks.
        small = impulse_response(model, horizon=200, rate_impact_pp=1e-4)
        contribs = analysis.price_contributions(small, baseline_ss)
        lin_exit = small.series["exit_rate_bp"][:40]
        pf_exit = contribs["all"].exit_rate_bp[:40]
        scale = np.max(np.abs(lin_exit))
        np.testing.assert_allclose(pf_exit, lin_exit, atol=0.05 * scale)

    def test_horizon_too_short_rejected(self, hf_irf, baseline_ss):
        with pytest.raises(ValueError, match="horizon"):
            analysis.price_contributions(hf_irf, baseline_ss, horizon=4)


class TestEmploymentGap:
    def test_gap_signs_and_relative_size(self, rf_benchmark, hf_irf, baseline_ss):
        gaps = analysis.employment_gap_rf_prices(rf_benchmark, hf_irf, baseline_ss)
        direct, equilibrium = gaps["direct"], gaps["equilibrium"]
        assert np.all(direct[:40] < 1e-12)  # extra decline from the extensive margin
        assert np.max(np.abs(equilibrium)) < np.max(np.abs(direct))

    def test_zero_shock_gives_zero_gaps(self, model, baseline_ss):
        p = baseline_ss.params
        rfp = RFParams(beta=p.beta, sigma=p.sigma, kappa1=p.kappa1, nu=p.nu,
                       gamma=p.gamma, xi=p.xi, phi=p.phi, rho_m=p.rho_m)
        rf0 = rf_irf(solve_rf(rfp), rfp, horizon=200, rate_impact_pp=0.0)
        hf0 = impulse_response(model, horizon=200, rate_impact_pp=0.0)
        gaps = analysis.employment_gap_rf_prices(rf0, hf0, baseline_ss)
        np.testing.assert_allclose(gaps["direct"], 0.0, atol=1e-9)
        np.testing.assert_allclose(gaps["equilibrium"], 0.0, atol=1e-12)


class TestDistributionShift:
    def test_deltas_sum_to_zero_and_revert(self, model, hf_irf, baseline_ss):
        masses = analysis.irf_mass_path(model, hf_irf)
        deltas = analysis.distribution_shift(masses, baseline_ss.measure.mass, [0, 4, 12, 20, 190])
        for h, d in deltas.items():
            assert abs(d.sum()) < 1e-12
        assert np.max(np.abs(deltas[190])) < 0.05 * np.max(np.abs(deltas[4]))

    def test_low_productivity_mass_falls_most_on_impact(self, model, hf_irf, baseline_ss):
        masses = analysis.irf_mass_path(model, hf_irf)
        stat = baseline_ss.measure.mass
        # level change at impact, normalized by stationary mass per point
        rel_change = (masses[0] - stat) / stat
        low = rel_change[:15].mean()
        high = rel_change[-15:].mean()
        assert low < high <= 1e-12

    def test_horizon_bounds_checked(self, model, hf_irf, baseline_ss):
        masses = analysis.irf_mass_path(model, hf_irf)
        with pytest.raises(ValueError):
            analysis.distribution_shift(masses, baseline_ss.measure.mass, [10_000])


class TestCsvEmitters:
    def test_profiles_csv(self, baseline_ss):
        csv = analysis.profiles_csv(baseline_ss)
        lines = csv.strip().splitlines()
        assert lines[0].split(",")[0] == "z"
        assert len(lines) == 1 + baseline_ss.env.chain.k
        # higher wage raises exit probabilities at every grid point
        import io as _io, csv as _csv

        rows = list(_csv.DictReader(_io.StringIO(csv)))
        assert all(float(r["exit_prob_high_w"]) > float(r["exit_prob_base"]) for r in rows)
        assert all(float(r["exit_prob_high_p"]) < float(r["exit_prob_base"]) for r in rows)
        assert all(float(r["exit_prob_high_r"]) > float(r["exit_prob_base"]) for r in rows)

    def test_size_distribution_csv(self, baseline_ss):
        csv = analysis.size_distribution_csv(baseline_ss)
        lines = csv.strip().splitlines()
        assert len(lines) == 1 + len(analysis.SIZE_CLASSES)
        shares = [float(l.split(",")[2]) for l in lines[1:]]
        assert abs(sum(shares) - 1.0) < 1e-9
        assert all(b < a for a, b in zip(shares, shares[1:]))

    def test_contributions_csv(self, contributions):
        csv = analysis.contributions_csv(contributions, horizon=20)
        lines = csv.strip().splitlines()
        assert lines[0].startswith("horizon,exit_all_bp,entry_all_bp")
        assert len(lines) == 22

    def test_distribution_shift_csv(self, model, hf_irf, baseline_ss):
        masses = analysis.irf_mass_path(model, hf_irf)
        deltas = analysis.distribution_shift(masses, baseline_ss.measure.mass, [0, 4])
        csv = analysis.distribution_shift_csv(baseline_ss, deltas)
        lines = csv.strip().splitlines()
        assert lines[0] == "z,delta_h0,delta_h4"
        assert len(lines) == 1 + baseline_ss.env.chain.k

    def test_job_contributions_signs(self, contributions, baseline_ss):
        # Positive values are cumulated jobs lost through each margin.
        jobs = analysis.entry_exit_job_contributions(contributions["all"], baseline_ss)
        assert jobs["from_exit"][8] > 0.0
        assert jobs["from_missing_entry"][1] > 0.0
