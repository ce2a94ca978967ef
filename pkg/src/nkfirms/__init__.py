"""Heterogeneous-firm New Keynesian economy: stationary equilibrium, calibration,
first-order dynamics, and monetary-policy impulse responses.

Heterogeneous production firms with idiosyncratic productivity and stochastic
fixed operating and entry costs sell an undifferentiated good to sticky-price
intermediate producers; entry and exit respond to the real interest rate, the
real wage, and the relative output price. The package solves and calibrates
the stationary equilibrium, perturbs the full discretized system, and compares
the economy against its representative-firm benchmark.
"""

from .equilibrium import (
    CalibrationTargets,
    FixedParams,
    ModelParams,
    SteadyState,
    calibrate,
    solve_stationary_equilibrium,
)
from .dynamics import IndeterminacyError, impulse_response, solve_model
from .firm import FirmEnv, FirmSolution, Prices, solve_firm_stationary
from .rfmodel import RFParams, rf_irf, solve_rf
from .stochproc import AR1Spec, LognormalSpec, MarkovChain, quarterly_from_annual, rouwenhorst
from .variants import FreeEntryConfig, VariantConfig

__all__ = [
    "AR1Spec",
    "CalibrationTargets",
    "FirmEnv",
    "FirmSolution",
    "FixedParams",
    "FreeEntryConfig",
    "IndeterminacyError",
    "LognormalSpec",
    "MarkovChain",
    "ModelParams",
    "Prices",
    "RFParams",
    "SteadyState",
    "VariantConfig",
    "calibrate",
    "impulse_response",
    "quarterly_from_annual",
    "rf_irf",
    "rouwenhorst",
    "solve_firm_stationary",
    "solve_model",
    "solve_rf",
    "solve_stationary_equilibrium",
]

__version__ = "0.1.0"
