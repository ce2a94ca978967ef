"""Production-firm decision problem.

Firms produce z * n^nu, hire labour in a spot market, and face iid lognormal
fixed operating costs; paying the current draw buys the right to operate next
period. Entrants draw productivity from the chain's entrant distribution and
pay an iid lognormal entry cost. The stationary problem is solved by value
function iteration with a Newton polish; perfect-foresight problems by
backward induction on a dated price path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stochproc import (
    LognormalSpec,
    MarkovChain,
    NonConvergenceError,
    expected_cost_gain,
    lognormal_cdf,
)
from .variants import VariantConfig

VFI_TOL = 1e-10
VFI_MAXIT = 100_000


@dataclass(frozen=True)
class Prices:
    """Prices the firm takes as given in one period.

    p : relative price of the undifferentiated good (units of final good)
    w : real wage
    sdf : one-period stochastic discount factor applied between this period
          and the next
    """

    p: float
    w: float
    sdf: float

    def __post_init__(self):
        if not (self.p > 0.0 and self.w > 0.0):
            raise ValueError(f"prices must be positive, got p={self.p}, w={self.w}")
        if not 0.0 <= self.sdf < 1.5:
            raise ValueError(f"discount factor out of range [0, 1.5): {self.sdf}")


@dataclass(frozen=True)
class FirmEnv:
    """Primitives of the firm problem: productivity chain, technology, cost distributions."""

    chain: MarkovChain
    nu: float
    operating_cost: LognormalSpec
    entry_cost: LognormalSpec
    variant: VariantConfig = field(default_factory=VariantConfig)

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"returns to scale must lie in (0, 1), got {self.nu}")


@dataclass(frozen=True)
class FirmSolution:
    """Per-grid-point firm solution at one date.

    value : V(z_i), expected discounted real profits of an operating firm
    labor : n(z_i)
    cont_threshold : c*(z_i), fixed-cost draw (final-good units) below which
        the firm pays to continue
    entry_threshold : e*(z_i), entry-cost draw below which a potential
        entrant starts operating
    survival : G_c at the threshold, probability of continuing
    entry_prob : G_e at the threshold, probability a draw-z entrant enters
    """

    value: np.ndarray
    labor: np.ndarray
    cont_threshold: np.ndarray
    entry_threshold: np.ndarray
    survival: np.ndarray
    entry_prob: np.ndarray


def labor_policy(z, p: float, w: float, nu: float):
    """Optimal labour input n = (w / (nu * p * z))^(1/(nu-1))."""
    return (w / (nu * p * np.asarray(z, dtype=float))) ** (1.0 / (nu - 1.0))


def static_profit(z, p: float, w: float, nu: float):
    """Maximized period profit p*z*n^nu - w*n at the optimal labour choice."""
    n = labor_policy(z, p, w, nu)
    return p * np.asarray(z, dtype=float) * n**nu - w * n


def _cost_scale(variant: VariantConfig, prices: Prices) -> float:
    """Units-of-final-good value of one unit of cost draw under the denomination."""
    if variant.cost_denomination == "labor":
        return prices.w
    if variant.cost_denomination == "production_good":
        return prices.p
    return 1.0


def _rate_shift(variant: VariantConfig, prices: Prices, beta: float | None):
    """Location shifts (operating, entry) when the cost distributions move with the real rate.

    The ex ante real rate is the inverse of the stochastic discount factor;
    the stationary value is 1/beta. With beta unknown (pure partial-equilibrium
    use) the shift is active only if the caller supplied it.
    """
    if variant.alpha_c == 0.0 and variant.alpha_e == 0.0:
        return 0.0, 0.0
    if beta is None:
        raise ValueError("interest-sensitive cost variant needs the stationary discount factor")
    dev = 1.0 / prices.sdf - 1.0 / beta
    return variant.alpha_c * dev, variant.alpha_e * dev


def continuation_values(V: np.ndarray, sdf: float, chain: MarkovChain) -> np.ndarray:
    """Discounted expected next-period value sdf * P @ V at each grid point."""
    return sdf * (chain.transition @ V)


def thresholds(
    V: np.ndarray,
    sdf: float,
    chain: MarkovChain,
    variant: VariantConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exit and entry thresholds (in final-good units) implied by a value function.

    c*(z_i) = sdf * sum_j P_ij V_j; e*(z_i) = V(z_i), or c*(z_i) when entrants
    only begin operating the period after paying.
    """
    cstar = continuation_values(np.asarray(V, dtype=float), sdf, chain)
    if variant is not None and variant.delayed_entry:
        estar = cstar.copy()
    else:
        estar = np.asarray(V, dtype=float).copy()
    return cstar, estar


def _solution_from_value(env: FirmEnv, prices: Prices, V: np.ndarray, beta: float | None) -> FirmSolution:
    sdf_firm = _firm_sdf(env, prices, beta)
    cstar, estar = thresholds(V, sdf_firm, env.chain, env.variant)
    scale = _cost_scale(env.variant, prices)
    shift_c, shift_e = _rate_shift(env.variant, prices, beta)
    survival = lognormal_cdf(env.operating_cost.shifted(shift_c), cstar / scale)
    entry_prob = lognormal_cdf(env.entry_cost.shifted(shift_e), estar / scale)
    n = labor_policy(env.chain.levels, prices.p, prices.w, env.nu)
    return FirmSolution(
        value=V,
        labor=n,
        cont_threshold=cstar,
        entry_threshold=estar,
        survival=np.asarray(survival),
        entry_prob=np.asarray(entry_prob),
    )


def _firm_sdf(env: FirmEnv, prices: Prices, beta: float | None) -> float:
    if env.variant.risk_neutral:
        if beta is None:
            raise ValueError("risk-neutral variant needs the subjective discount factor")
        return beta
    return prices.sdf


def bellman_rhs(env: FirmEnv, prices: Prices, V: np.ndarray, beta: float | None = None) -> np.ndarray:
    """One application of the Bellman operator at fixed prices."""
    sdf_firm = _firm_sdf(env, prices, beta)
    cstar = continuation_values(V, sdf_firm, env.chain)
    scale = _cost_scale(env.variant, prices)
    shift_c, _ = _rate_shift(env.variant, prices, beta)
    pi = static_profit(env.chain.levels, prices.p, prices.w, env.nu)
    return pi + scale * expected_cost_gain(env.operating_cost.shifted(shift_c), cstar / scale)


def solve_firm_stationary(
    env: FirmEnv,
    prices: Prices,
    beta: float | None = None,
    tol: float = VFI_TOL,
    maxit: int = VFI_MAXIT,
) -> FirmSolution:
    """Fixed point of the stationary Bellman equation, with thresholds and probabilities.

    Plain value function iteration until the sup-norm change falls below
    tol * (1 + sup|V|), then a couple of Newton steps on V = T(V) (the operator
    derivative is G_c at the threshold times the discounted transition, so the
    Newton system is small and explicit). Raises on non-convergence or if the
    converged value is negative anywhere, which signals degenerate prices.
    """
    pi = static_profit(env.chain.levels, prices.p, prices.w, env.nu)
    V = pi / (1.0 - min(_firm_sdf(env, prices, beta), 0.999))
    converged = False
    for _ in range(maxit):
        V_new = bellman_rhs(env, prices, V, beta)
        if np.max(np.abs(V_new - V)) < tol * (1.0 + np.max(np.abs(V_new))):
            V = V_new
            converged = True
            break
        V = V_new
    if not converged:
        raise NonConvergenceError(f"value function iteration exceeded {maxit} iterations")

    sdf_firm = _firm_sdf(env, prices, beta)
    scale = _cost_scale(env.variant, prices)
    shift_c, _ = _rate_shift(env.variant, prices, beta)
    for _ in range(4):
        cstar = continuation_values(V, sdf_firm, env.chain)
        resid = pi + scale * expected_cost_gain(env.operating_cost.shifted(shift_c), cstar / scale) - V
        # dT/dV = diag(G_c(c*/scale)) @ (sdf * P)
        G = lognormal_cdf(env.operating_cost.shifted(shift_c), cstar / scale)
        J = np.eye(env.chain.k) - G[:, None] * (sdf_firm * env.chain.transition)
        step = np.linalg.solve(J, resid)
        V = V + step
        if np.max(np.abs(step)) < 1e-14 * (1.0 + np.max(np.abs(V))):
            break

    if np.any(V < 0.0):
        raise ValueError("negative firm value at converged fixed point; prices are degenerate")
    return _solution_from_value(env, prices, V, beta)


def solve_perfect_foresight(
    env: FirmEnv,
    price_path: list[Prices],
    terminal: FirmSolution,
    beta: float | None = None,
) -> list[FirmSolution]:
    """Backward induction on a dated price path ending at the stationary solution.

    price_path[t] carries the discount factor between t and t+1; the value at
    the final date discounts into the terminal (stationary) value function.
    Returns one FirmSolution per date.
    """
    T = len(price_path)
    if T < 1:
        raise ValueError("price path must cover at least one period")
    out: list[FirmSolution | None] = [None] * T
    V_next = terminal.value
    for t in range(T - 1, -1, -1):
        prices = price_path[t]
        sdf_firm = _firm_sdf(env, prices, beta)
        cstar = continuation_values(V_next, sdf_firm, env.chain)
        scale = _cost_scale(env.variant, prices)
        shift_c, shift_e = _rate_shift(env.variant, prices, beta)
        pi = static_profit(env.chain.levels, prices.p, prices.w, env.nu)
        V_t = pi + scale * expected_cost_gain(env.operating_cost.shifted(shift_c), cstar / scale)
        estar = cstar.copy() if env.variant.delayed_entry else V_t.copy()
        out[t] = FirmSolution(
            value=V_t,
            labor=labor_policy(env.chain.levels, prices.p, prices.w, env.nu),
            cont_threshold=cstar,
            entry_threshold=estar,
            survival=np.asarray(lognormal_cdf(env.operating_cost.shifted(shift_c), cstar / scale)),
            entry_prob=np.asarray(lognormal_cdf(env.entry_cost.shifted(shift_e), estar / scale)),
        )
        V_next = V_t
    return out  # type: ignore[return-value]
