"""Representative-firm benchmark: the three-equation log-linear economy.

One firm with the same decreasing-returns technology, no fixed costs and no
entry or exit. Log-linearization collapses the economy to an IS curve, a
Phillips curve whose slope is steepened by decreasing returns, and the policy
rule. With an AR(1) policy shock every variable is an impact coefficient times
the shock, solved in closed form by undetermined coefficients; this doubles as
the analytic oracle for the generic linear rational-expectations solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import IRF_COLUMNS, IrfSet


@dataclass(frozen=True)
class RFParams:
    """Parameters of the benchmark; matched to the heterogeneous-firm calibration."""

    beta: float
    sigma: float
    kappa1: float
    nu: float
    gamma: float
    xi: float
    phi: float
    rho_m: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0 and self.sigma > 0.0 and 0.0 < self.nu <= 1.0):
            raise ValueError("invalid preference or technology parameters")
        if not 0.0 <= self.rho_m < 1.0:
            raise ValueError("shock persistence must lie in [0, 1)")

    @property
    def slope(self) -> float:
        """Phillips-curve slope ((gamma-1)/xi) * (sigma + (kappa1+1)/nu - 1)."""
        return (self.gamma - 1.0) / self.xi * (self.sigma + (self.kappa1 + 1.0) / self.nu - 1.0)


@dataclass(frozen=True)
class RFSolution:
    """Impact coefficients per unit shock; every path is coefficient * rho_m^t."""

    a_output: float
    a_inflation: float
    a_nominal: float
    a_real: float
    slope: float
    rho_m: float


def solve_rf(params: RFParams) -> RFSolution:
    """Undetermined coefficients on the AR(1)-shock solution of the three equations."""
    if params.phi <= 1.0:
        raise ValueError(
            f"policy response {params.phi} violates the Taylor principle; no determinate solution"
        )
    rho = params.rho_m
    S = params.slope / (1.0 - params.beta * rho)
    a_y = -1.0 / (params.sigma * (1.0 - rho) + (params.phi - rho) * S)
    a_pi = S * a_y
    a_R = params.phi * a_pi + 1.0
    a_r = a_R - rho * a_pi
    return RFSolution(
        a_output=a_y, a_inflation=a_pi, a_nominal=a_R, a_real=a_r, slope=params.slope, rho_m=rho
    )


def rf_system(params: RFParams):
    """(A, B, C, D) matrices of the three-equation system, ordering (output, inflation, rate).

    Residual conventions: IS residual Y_t - Y_{t+1} + (R_t - Pi_{t+1})/sigma,
    Phillips residual Pi_t - slope*Y_t - beta*Pi_{t+1}, policy residual
    phi*Pi_t + eps_t - R_t.
    """
    A = np.array(
        [
            [-1.0, -1.0 / params.sigma, 0.0],
            [0.0, -params.beta, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    B = np.array(
        [
            [1.0, 0.0, 1.0 / params.sigma],
            [-params.slope, 1.0, 0.0],
            [0.0, params.phi, -1.0],
        ]
    )
    C = np.zeros((3, 3))
    D = np.array([[0.0], [0.0], [1.0]])
    return A, B, C, D


def rf_irf(sol: RFSolution, params: RFParams, horizon: int = 200, rate_impact_pp: float = 1.0) -> IrfSet:
    """Geometric impulse responses under the shared real-rate normalization.

    Employment, the real wage, the relative price and dividends follow from the
    static conditions: N = Y/nu in logs, w from labour supply, p from the
    firm's first-order condition, dividends from profits Y - wN with
    wN/Y = nu*(gamma-1)/gamma in the stationary equilibrium.
    """
    eta = 0.01 * rate_impact_pp / sol.a_real
    decay = sol.rho_m ** np.arange(horizon + 1)
    y = 100.0 * sol.a_output * eta * decay
    n = y / params.nu
    w = params.sigma * y + params.kappa1 * n
    p = (params.sigma + (params.kappa1 + 1.0) / params.nu - 1.0) * y
    wage_share = params.nu * (params.gamma - 1.0) / params.gamma
    series = {
        "output": y,
        "consumption": y.copy(),
        "employment": n,
        "real_wage": w,
        "rel_price": p,
        "inflation": 100.0 * sol.a_inflation * eta * decay,
        "nominal_rate": 100.0 * sol.a_nominal * eta * decay,
        "real_rate": 100.0 * sol.a_real * eta * decay,
        "entry_rate_bp": np.zeros(horizon + 1),
        "exit_rate_bp": np.zeros(horizon + 1),
        "gamma": np.zeros(horizon + 1),
        "tfp": np.zeros(horizon + 1),
        "dividends": (y - wage_share * (w + n)) / (1.0 - wage_share),
    }
    assert set(series) == set(IRF_COLUMNS)
    return IrfSet(
        horizons=np.arange(horizon + 1),
        series=series,
        shock_scale=eta,
        normalization=f"ex ante real rate +{rate_impact_pp}pp (quarterly) on impact",
        model="rf",
    )
