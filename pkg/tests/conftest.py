import pytest

from nkfirms.equilibrium import (
    CalibrationTargets,
    FixedParams,
    ModelParams,
    calibrate,
    solve_stationary_equilibrium,
)
from nkfirms.stochproc import AR1Spec, LognormalSpec, quarterly_from_annual

ANNUAL_RHO_N = 0.9771
ANNUAL_SIGMA_N = 0.2676


@pytest.fixture(scope="session")
def quarterly_process():
    return quarterly_from_annual(ANNUAL_RHO_N, ANNUAL_SIGMA_N, 0.9)


@pytest.fixture(scope="session")
def baseline_fixed(quarterly_process):
    rho_z, sigma_z = quarterly_process
    return FixedParams(
        beta=1.04**-0.25,
        sigma=1.0,
        kappa1=1.0,
        gamma=6.0,
        xi=50.0,
        phi=1.5,
        nu=0.9,
        rho_z=rho_z,
        sigma_z=sigma_z,
        k=50,
        rho_m=0.5,
    )


@pytest.fixture(scope="session")
def baseline_targets():
    return CalibrationTargets(
        annual_exit_rate=0.086,
        avg_incumbent_size=19.2,
        avg_exiting_size=7.7,
        employment=0.6,
    )


@pytest.fixture(scope="session")
def reference_params(quarterly_process):
    """Benchmark parameter set with the values as commonly rounded in reporting."""
    rho_z, sigma_z = quarterly_process
    cost = LognormalSpec(mu=-6.216, sigma=4.537)
    return ModelParams(
        beta=1.04**-0.25,
        sigma=1.0,
        kappa0=2.083,
        kappa1=1.0,
        gamma=6.0,
        xi=50.0,
        phi=1.5,
        nu=0.9,
        entrant_mass=7.483e-4,
        productivity=AR1Spec(rho=rho_z, sigma=sigma_z, mean=0.439),
        operating_cost=cost,
        entry_cost=cost,
        k=50,
        rho_m=0.5,
    )


@pytest.fixture(scope="session")
def calibrated(baseline_targets, baseline_fixed):
    return calibrate(baseline_targets, baseline_fixed)


@pytest.fixture(scope="session")
def baseline_ss(calibrated):
    return solve_stationary_equilibrium(calibrated.params)
