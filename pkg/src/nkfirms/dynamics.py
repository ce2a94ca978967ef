"""Dynamic equilibrium system, first-order perturbation solution, and impulse responses.

The endogenous vector stacks the firm value function and the firm measure on
the productivity grid with the seven aggregates (employment, consumption, real
wage, nominal rate, inflation, relative price, output), giving a 2k+7 system;
the free-entry variant adds the entrant mass and its zero-profit condition.
Equations are dated so that the measure in place at t is determined by last
period's survival decisions and this period's entrants, which makes the
measure the economy's endogenous state.

Deviations are logs for strictly positive variables and levels for the
per-point masses (whose stationary values vanish in the tails). The linear
rational-expectations solution x_t = P x_{t-1} + Q eps_t comes from iterating
the quadratic matrix equation to its stable solvent; determinacy requires both
the backward transition and its forward complement to be stable.

Survival decisions are made one period ahead under expectations, so on the
impact date of a shock the survival margin cannot respond; the impact column
is therefore computed from a variant of the system with the survival terms
frozen at their stationary values, while entrants (who decide on the spot)
respond immediately.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .equilibrium import SteadyState
from .firm import labor_policy, static_profit
from .stochproc import expected_cost_gain, lognormal_cdf, partial_expectation

AGGREGATE_NAMES = ("employment", "consumption", "real_wage", "nominal_rate", "inflation", "rel_price", "output")

IRF_COLUMNS = (
    "output",
    "consumption",
    "employment",
    "real_wage",
    "rel_price",
    "inflation",
    "nominal_rate",
    "real_rate",
    "entry_rate_bp",
    "exit_rate_bp",
    "gamma",
    "tfp",
    "dividends",
)

IRF_UNITS = {name: "percent deviation" for name in IRF_COLUMNS}
IRF_UNITS["real_rate"] = "percentage-point deviation (quarterly)"
IRF_UNITS["entry_rate_bp"] = "basis-point deviation"
IRF_UNITS["exit_rate_bp"] = "basis-point deviation"

NUM_FORMAT = "%.12g"


class IndeterminacyError(RuntimeError):
    """No unique stable rational-expectations solution."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        if diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class VariableLayout:
    """Ordering and deviation units of the endogenous vector."""

    k: int
    free_entry: bool

    @property
    def n(self) -> int:
        return 2 * self.k + 7 + (1 if self.free_entry else 0)

    @property
    def names(self) -> list[str]:
        names = [f"value_{i}" for i in range(self.k)]
        names += [f"mass_{i}" for i in range(self.k)]
        names += list(AGGREGATE_NAMES)
        if self.free_entry:
            names.append("entrant_mass")
        return names

    @property
    def value_slice(self) -> slice:
        return slice(0, self.k)

    @property
    def mass_slice(self) -> slice:
        return slice(self.k, 2 * self.k)

    def idx(self, name: str) -> int:
        return 2 * self.k + AGGREGATE_NAMES.index(name) if name != "entrant_mass" else 2 * self.k + 7

    @property
    def logged(self) -> np.ndarray:
        """True where the deviation is a log; masses stay in levels."""
        flags = np.ones(self.n, dtype=bool)
        flags[self.mass_slice] = False
        return flags


@dataclass
class EquilibriumSystem:
    """Residual evaluator of the dynamic system around a stationary equilibrium.

    Deviation units: log points for logged variables; for the per-point masses,
    levels measured in units of the largest stationary mass (so all deviation
    coordinates are O(1) and share one finite-difference step).
    """

    ss: SteadyState
    layout: VariableLayout
    x_ss: np.ndarray
    mass_scale: float

    def to_natural(self, dev: np.ndarray) -> np.ndarray:
        x = np.where(self.layout.logged, self.x_ss * np.exp(dev), self.x_ss + dev * self.mass_scale)
        return x

    def mass_levels(self, dev: np.ndarray) -> np.ndarray:
        """Level deviations of the per-point masses implied by a deviation vector."""
        return dev[..., self.layout.mass_slice] * self.mass_scale

    def _unpack(self, x: np.ndarray):
        lay = self.layout
        V = x[lay.value_slice]
        mu = x[lay.mass_slice]
        agg = {name: x[lay.idx(name)] for name in AGGREGATE_NAMES}
        mtil = x[lay.idx("entrant_mass")] if lay.free_entry else None
        return V, mu, agg, mtil

    def _cost_scale(self, w, p):
        denom = self.ss.params.variant.cost_denomination
        if denom == "labor":
            return w
        if denom == "production_good":
            return p
        return 1.0

    def residual(
        self,
        x_lag: np.ndarray,
        x_cur: np.ndarray,
        x_lead: np.ndarray,
        eps: float,
        impact: bool = False,
    ) -> np.ndarray:
        """Residuals of the 2k+7 (+1 under free entry) equations, in natural units.

        `impact` freezes the lagged survival (and, under delayed entry, the
        lagged entry) terms of the measure rows at their stationary values:
        those decisions predate the shock. Inputs are deviation vectors.
        """
        x_lag = self.to_natural(x_lag)
        x_cur = self.to_natural(x_cur)
        x_lead = self.to_natural(x_lead)
        ss = self.ss
        params = ss.params
        variant = params.variant
        chain = ss.env.chain
        P, q, z = chain.transition, chain.entrant_dist, chain.levels
        beta, sigma = params.beta, params.sigma
        R_ss, Pi_ss = ss.nominal_rate, ss.inflation

        V_l, mu_l, agg_l, mtil_l = self._unpack(x_lag)
        V, mu, agg, mtil = self._unpack(x_cur)
        V_f, mu_f, agg_f, mtil_f = self._unpack(x_lead)
        N, C, w = agg["employment"], agg["consumption"], agg["real_wage"]
        R, Pi, p, Y = agg["nominal_rate"], agg["inflation"], agg["rel_price"], agg["output"]

        res = np.empty(self.layout.n)

        # Household stochastic discount factor between t and t+1, and the firm's.
        sdf_next = beta * (agg_f["consumption"] / C) ** (-sigma)
        sdf_firm_next = beta if variant.risk_neutral else sdf_next

        scale_t = self._cost_scale(w, p)
        rate_dev_t = R / agg_f["inflation"] - 1.0 / beta
        cost_t = params.operating_cost.shifted(variant.alpha_c * rate_dev_t)
        entry_cost_t = params.entry_cost.shifted(variant.alpha_e * rate_dev_t)

        # Firm value: static profit plus the continuation option over the cost draw.
        cstar = sdf_firm_next * (P @ V_f)
        profit = static_profit(z, p, w, params.nu)
        res[self.layout.value_slice] = (
            profit + scale_t * expected_cost_gain(cost_t, cstar / scale_t) - V
        )

        # Measure in place at t: survivors of t-1 decisions plus today's entrants.
        if impact:
            survived = ss.firm.survival * mu_l
        else:
            sdf_firm_prev = beta if variant.risk_neutral else beta * (C / agg_l["consumption"]) ** (-sigma)
            scale_prev = self._cost_scale(agg_l["real_wage"], agg_l["rel_price"])
            rate_dev_prev = agg_l["nominal_rate"] / Pi - 1.0 / beta
            cost_prev = params.operating_cost.shifted(variant.alpha_c * rate_dev_prev)
            cstar_prev = sdf_firm_prev * (P @ V)
            survived = lognormal_cdf(cost_prev, cstar_prev / scale_prev) * mu_l
        if variant.free_entry is not None:
            entrants = mtil * q
        elif variant.delayed_entry:
            if impact:
                entrants = params.entrant_mass * ss.firm.entry_prob * q @ P
            else:
                entry_cost_prev = params.entry_cost.shifted(variant.alpha_e * rate_dev_prev)
                eprob_prev = lognormal_cdf(entry_cost_prev, cstar_prev / scale_prev)
                entrants = params.entrant_mass * (eprob_prev * q) @ P
        else:
            eprob = lognormal_cdf(entry_cost_t, V / scale_t)
            entrants = params.entrant_mass * eprob * q
        res[self.layout.mass_slice] = survived @ P + entrants - mu

        n = labor_policy(z, p, w, params.nu)
        base = 2 * self.layout.k
        res[base + 0] = n @ mu - N  # labour market clearing
        res[base + 1] = params.kappa0 * C**sigma * N**params.kappa1 - w  # labour supply
        res[base + 2] = sdf_next * R / agg_f["inflation"] - 1.0  # Euler equation
        res[base + 3] = R_ss * (Pi / Pi_ss) ** params.phi * np.exp(eps) - R  # policy rule
        res[base + 4] = (  # price-setting condition
            (1.0 - params.gamma)
            + params.gamma * p
            - params.xi * (Pi - 1.0) * Pi
            + params.xi * sdf_next * (agg_f["inflation"] - 1.0) * agg_f["inflation"] * agg_f["output"] / Y
        )
        res[base + 5] = (z * n**params.nu) @ mu - Y  # output aggregation
        res[base + 6] = C + 0.5 * params.xi * (Pi - 1.0) ** 2 * Y - Y  # goods clearing
        if self.layout.free_entry:
            fe = params.variant.free_entry
            mtil_ss = ss.measure.entrant_scale
            res[base + 7] = V @ q - fe.e_tilde * np.exp(fe.alpha * (mtil - mtil_ss))
        return res

    def flows(self, x_cur: np.ndarray, x_lead: np.ndarray) -> np.ndarray:
        """Gross flows and fiscal/financial aggregates used for derived IRF series.

        Returns (exit flow from date-t decisions, entry flow at t, total firm
        mass, transfers, dividends), with thresholds dated exactly as the
        corresponding rates are measured.
        """
        ss = self.ss
        params = ss.params
        variant = params.variant
        chain = ss.env.chain
        P, q, z = chain.transition, chain.entrant_dist, chain.levels

        V, mu, agg, mtil = self._unpack(x_cur)
        V_f, _, agg_f, _ = self._unpack(x_lead)
        N, C, w = agg["employment"], agg["consumption"], agg["real_wage"]
        R, p, Y = agg["nominal_rate"], agg["rel_price"], agg["output"]

        sdf_next = params.beta * (agg_f["consumption"] / C) ** (-params.sigma)
        sdf_firm_next = params.beta if variant.risk_neutral else sdf_next
        scale_t = self._cost_scale(w, p)
        rate_dev_t = R / agg_f["inflation"] - 1.0 / params.beta
        cost_t = params.operating_cost.shifted(variant.alpha_c * rate_dev_t)
        entry_cost_t = params.entry_cost.shifted(variant.alpha_e * rate_dev_t)

        cstar = sdf_firm_next * (P @ V_f)
        survival = lognormal_cdf(cost_t, cstar / scale_t)
        exit_flow = (1.0 - survival) @ mu

        if variant.free_entry is not None:
            entry_flow = mtil
            entry_cost_paid = mtil * variant.free_entry.e_tilde * np.exp(
                variant.free_entry.alpha * (mtil - ss.measure.entrant_scale)
            )
        elif variant.delayed_entry:
            eprob = lognormal_cdf(entry_cost_t, cstar / scale_t)
            entry_flow = params.entrant_mass * eprob @ q
            entry_cost_paid = params.entrant_mass * (
                scale_t * partial_expectation(entry_cost_t, cstar / scale_t)
            ) @ q
        else:
            eprob = lognormal_cdf(entry_cost_t, V / scale_t)
            entry_flow = params.entrant_mass * eprob @ q
            entry_cost_paid = params.entrant_mass * (
                scale_t * partial_expectation(entry_cost_t, V / scale_t)
            ) @ q

        transfers = (scale_t * partial_expectation(cost_t, cstar / scale_t)) @ mu + entry_cost_paid
        dividends = Y - w * N - transfers
        return np.array([exit_flow, entry_flow, float(mu.sum()), transfers, dividends])


def build_system(ss: SteadyState) -> EquilibriumSystem:
    """Assemble the residual evaluator and verify it vanishes at the steady state."""
    variant = ss.params.variant
    layout = VariableLayout(k=ss.env.chain.k, free_entry=variant.free_entry is not None)
    agg = ss.aggregates
    x_ss = np.concatenate(
        [
            ss.firm.value,
            ss.measure.mass,
            [
                agg.employment,
                agg.consumption,
                ss.prices.w,
                ss.nominal_rate,
                ss.inflation,
                ss.prices.p,
                agg.output,
            ],
            [ss.measure.entrant_scale] if layout.free_entry else [],
        ]
    )
    system = EquilibriumSystem(
        ss=ss, layout=layout, x_ss=x_ss, mass_scale=max(float(ss.measure.mass.max()), 1e-12)
    )
    zero = np.zeros(layout.n)
    resid = system.residual(zero, zero, zero, 0.0)
    worst = np.max(np.abs(resid))
    if worst > 1e-8:
        raise ValueError(f"steady state violates the dynamic system: max residual {worst:.2e}")
    return system


def linearize(system: EquilibriumSystem, rel_step: float = 1e-6, impact: bool = False):
    """Central finite differences of the residuals in deviation coordinates.

    Deviations are log points for logged variables and normalized levels for
    masses (tail masses underflow any per-point relative step, so the mass
    coordinate is already scaled by the largest stationary mass). Returns
    (A, B, C, D) for leads, current, lags, and the shock.
    """
    n = system.layout.n
    zero = np.zeros(n)
    mats = []
    for position in range(3):
        J = np.empty((n, n))
        for j in range(n):
            h = rel_step
            bump = np.zeros(n)
            bump[j] = h
            args_hi = [zero.copy(), zero.copy(), zero.copy()]
            args_lo = [zero.copy(), zero.copy(), zero.copy()]
            args_hi[position] = bump
            args_lo[position] = -bump
            hi = system.residual(*args_hi, 0.0, impact=impact)
            lo = system.residual(*args_lo, 0.0, impact=impact)
            J[:, j] = (hi - lo) / (2.0 * h)
        mats.append(J)
    h = rel_step
    hi = system.residual(zero, zero, zero, h, impact=impact)
    lo = system.residual(zero, zero, zero, -h, impact=impact)
    D = ((hi - lo) / (2.0 * h)).reshape(n, 1)
    C_, B, A = mats  # position 0 = lag, 1 = current, 2 = lead
    return A, B, C_, D


def _row_scale(*mats):
    scale = np.zeros(mats[0].shape[0])
    for m in mats:
        scale = np.maximum(scale, np.max(np.abs(m), axis=1))
    scale[scale == 0.0] = 1.0
    return scale


def _spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0


def _pencil_diagnostics(A, B, C):
    """Eigenvalue counts of the quadratic pencil lambda^2 A + lambda B + C."""
    n = A.shape[0]
    G = np.block([[-B, -C], [np.eye(n), np.zeros((n, n))]])
    E = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), np.eye(n)]])
    alpha, beta_vals, *_ = linalg.eig(G, E, right=False, homogeneous_eigvals=True)
    finite = np.abs(beta_vals) > 1e-12 * np.max(np.abs(alpha))
    lam = np.abs(alpha[finite] / beta_vals[finite])
    n_inf = int((~finite).sum())
    n_pre = int(np.any(np.abs(C) > 0.0, axis=0).sum())
    return {
        "stable_eigenvalues": int((lam < 1.0 - 1e-9).sum()),
        "unstable_eigenvalues": int((lam > 1.0 + 1e-9).sum()) + n_inf,
        "borderline_eigenvalues": int(((lam >= 1.0 - 1e-9) & (lam <= 1.0 + 1e-9)).sum()),
        "predetermined_variables": n_pre,
    }


@dataclass(frozen=True)
class LinearSolution:
    """Stable first-order solution x_t = P x_{t-1} + Q eps_t (deviation units)."""

    transition: np.ndarray
    impact: np.ndarray
    spectral_radius: float
    forward_radius: float
    determinate: bool
    iterations: int


def solve_linear_re(
    A: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    D: np.ndarray,
    rho_shock: float = 0.0,
    tol: float = 1e-12,
    maxit: int = 100_000,
) -> LinearSolution:
    """Stable solvent of A P^2 + B P + C = 0 by linear time iteration, plus the shock column.

    The impact column solves (A P + B + rho A) Q = -D, which folds in the
    autoregression of the exogenous shock. Determinacy requires the spectral
    radius of both P and the forward complement -(A P + B)^{-1} A to lie
    inside the unit circle; failures raise with eigenvalue counts from the
    companion pencil.
    """
    scale = _row_scale(A, B, C, D)
    A = A / scale[:, None]
    B = B / scale[:, None]
    C = C / scale[:, None]
    D = D / scale[:, None]

    n = A.shape[0]
    P = np.zeros((n, n))
    converged = False
    iterations = 0
    for iterations in range(1, maxit + 1):
        try:
            P_new = -np.linalg.solve(B + A @ P, C)
        except np.linalg.LinAlgError as exc:
            raise IndeterminacyError(
                f"time iteration hit a singular bracket at step {iterations}",
                _pencil_diagnostics(A, B, C),
            ) from exc
        diff = np.max(np.abs(P_new - P))
        scale_P = max(1.0, np.max(np.abs(P_new)))
        P = P_new
        if diff < tol * scale_P:
            converged = True
            break
        if not np.isfinite(diff) or diff > 1e12 * scale_P:
            break
    if not converged:
        raise IndeterminacyError(
            "no stable solution: time iteration failed to converge",
            _pencil_diagnostics(A, B, C),
        )
    forward = -np.linalg.solve(B + A @ P, A)
    r_back = _spectral_radius(P)
    r_fwd = _spectral_radius(forward)
    if r_back >= 1.0 - 1e-8 or r_fwd >= 1.0 - 1e-8:
        diag = _pencil_diagnostics(A, B, C)
        diag["transition_radius"] = round(r_back, 6)
        diag["forward_radius"] = round(r_fwd, 6)
        raise IndeterminacyError(
            "solution fails stability: "
            + ("explosive transition" if r_back >= 1.0 - 1e-8 else "multiple stable solutions"),
            diag,
        )
    Q = np.linalg.solve(A @ P + B + rho_shock * A, -D).reshape(n)
    return LinearSolution(
        transition=P,
        impact=Q,
        spectral_radius=r_back,
        forward_radius=r_fwd,
        determinate=True,
        iterations=iterations,
    )


@dataclass(frozen=True)
class ModelSolution:
    """System, linear solution, and the surprise-corrected impact column."""

    system: EquilibriumSystem
    linear: LinearSolution
    impact_on_shock: np.ndarray  # x_0 response to a date-0 innovation


def solve_model(ss: SteadyState) -> ModelSolution:
    """Linearize the economy around its stationary equilibrium and solve it."""
    system = build_system(ss)
    A, B, C, D = linearize(system)
    sol = solve_linear_re(A, B, C, D, rho_shock=ss.params.rho_m)

    # Impact form: survival decisions taken before the shock cannot respond at
    # date 0, so the impact column uses the frozen-survival current matrix.
    _, B0, _, D0 = linearize(system, impact=True)
    scale = _row_scale(A, B, C, D)
    P, Q = sol.transition, sol.impact
    rho = ss.params.rho_m
    lhs = (A / scale[:, None]) @ P + B0 / scale[:, None]
    rhs = -(rho * (A / scale[:, None]) @ Q + (D0 / scale[:, None]).reshape(-1))
    Q0 = np.linalg.solve(lhs, rhs)
    return ModelSolution(system=system, linear=sol, impact_on_shock=Q0)


@dataclass(frozen=True)
class IrfSet:
    """Impulse responses: named series plus the underlying deviation paths.

    series units: percent deviations, except the rates in basis points and the
    real rate in quarterly percentage points. dev_path holds the raw deviation
    vectors (logs / mass levels) for horizons 0..H+1.
    """

    horizons: np.ndarray
    series: dict[str, np.ndarray]
    shock_scale: float
    normalization: str
    model: str
    dev_path: np.ndarray | None = None
    layout: VariableLayout | None = None

    def to_csv(self, variant_tag: str | None = None) -> str:
        buf = io.StringIO()
        header = "horizon," + ",".join(IRF_COLUMNS)
        buf.write(header + (",variant\n" if variant_tag else "\n"))
        for t in self.horizons:
            row = [str(int(t))] + [NUM_FORMAT % self.series[c][t] for c in IRF_COLUMNS]
            if variant_tag:
                row.append(variant_tag)
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def metadata(self) -> str:
        lines = [f"model = {self.model}", f"normalization = {self.normalization}",
                 f"shock_scale = {NUM_FORMAT % self.shock_scale}"]
        lines += [f"unit.{name} = {IRF_UNITS[name]}" for name in IRF_COLUMNS]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        out = {}
        for name in IRF_COLUMNS:
            path = self.series[name]
            peak = path[np.argmax(np.abs(path))]
            out[name] = {
                "impact": float(path[0]),
                "peak": float(peak),
                "autocorr_4q": four_quarter_autocorrelation(path),
            }
        return out


def four_quarter_autocorrelation(path: np.ndarray) -> float:
    """Population four-quarter autocorrelation of a series driven only by this shock."""
    path = np.asarray(path, dtype=float)
    denom = path @ path
    if denom == 0.0:
        return 0.0
    return float(path[:-4] @ path[4:] / denom)


def impulse_response(
    model: ModelSolution,
    horizon: int = 200,
    rate_impact_pp: float = 1.0,
    label: str = "hf",
) -> IrfSet:
    """Impulse responses to the monetary shock, scaled on the ex ante real rate.

    The innovation is sized so the date-0 ex ante real rate rises by
    `rate_impact_pp` quarterly percentage points. Derived series (entry and
    exit rates, total mass, TFP, dividends) are directional derivatives of
    their exact definitions along the solution path, so every reported path is
    precisely linear in the shock.
    """
    system = model.system
    layout = system.layout
    ss = system.ss
    rho = ss.params.rho_m
    P, Q, Q0 = model.linear.transition, model.linear.impact, model.impact_on_shock

    # Unit-innovation deviation path out to H+1 (the extra date feeds leads).
    T = horizon + 2
    dev = np.empty((T, layout.n))
    dev[0] = Q0
    for t in range(1, T):
        dev[t] = P @ dev[t - 1] + Q * rho**t

    iR, iPi = layout.idx("nominal_rate"), layout.idx("inflation")
    unit_rate_impact = dev[0, iR] - dev[1, iPi]
    if unit_rate_impact == 0.0:
        raise ValueError("shock does not move the ex ante real rate; cannot normalize")
    eta = 0.01 * rate_impact_pp / unit_rate_impact

    # All series are built on the unit-innovation path and scaled at the end,
    # so reported responses are exactly linear in the shock size.
    H = horizon
    series: dict[str, np.ndarray] = {}
    for name in ("output", "consumption", "employment", "real_wage", "rel_price", "inflation", "nominal_rate"):
        series[name] = 100.0 * dev[: H + 1, layout.idx(name)]
    series["real_rate"] = 100.0 * (dev[: H + 1, iR] - dev[1 : H + 2, iPi])

    # Mass-derived series are linear in the mass deviations.
    z = ss.env.chain.levels
    weights = z ** (1.0 / (1.0 - ss.params.nu))
    S_ss = float(weights @ ss.measure.mass)
    dmass = system.mass_levels(dev)
    gamma_dev = dmass.sum(axis=1)
    series["gamma"] = 100.0 * gamma_dev[: H + 1] / ss.measure.total
    series["tfp"] = (100.0 * (1.0 - ss.params.nu) * (dmass @ weights) / S_ss)[: H + 1]

    # Flow-derived series: directional derivative of the exact flow formulas.
    h = 1e-6
    flows_dev = np.empty((H + 1, 5))
    for t in range(H + 1):
        hi = system.flows(system.to_natural(h * dev[t]), system.to_natural(h * dev[t + 1]))
        lo = system.flows(system.to_natural(-h * dev[t]), system.to_natural(-h * dev[t + 1]))
        flows_dev[t] = (hi - lo) / (2.0 * h)
    flows_ss = system.flows(system.x_ss, system.x_ss)
    exit_flow_ss, entry_flow_ss, gamma_ss, _, dividends_ss = flows_ss

    dgamma = gamma_dev
    # Measurement convention: flows over the average of adjacent-period total masses.
    exit_rate_dev = flows_dev[:, 0] / gamma_ss - (exit_flow_ss / gamma_ss**2) * 0.5 * (
        dgamma[: H + 1] + dgamma[1 : H + 2]
    )
    lagged = np.concatenate([[0.0], dgamma[:H]])
    entry_rate_dev = flows_dev[:, 1] / gamma_ss - (entry_flow_ss / gamma_ss**2) * 0.5 * (
        dgamma[: H + 1] + lagged
    )
    series["exit_rate_bp"] = 1e4 * exit_rate_dev
    series["entry_rate_bp"] = 1e4 * entry_rate_dev
    series["dividends"] = 100.0 * flows_dev[:, 4] / dividends_ss

    series = {name: eta * path for name, path in series.items()}
    return IrfSet(
        horizons=np.arange(H + 1),
        series=series,
        shock_scale=eta,
        normalization=f"ex ante real rate +{rate_impact_pp}pp (quarterly) on impact",
        model=label,
        dev_path=eta * dev,
        layout=layout,
    )
