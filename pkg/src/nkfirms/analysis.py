"""Derived diagnostics: entry/exit rate paths, the TFP decomposition, per-price
contribution decompositions, the employment-gap exercise, and distribution shifts.

Rates follow the establishment-survey convention: flows divided by the average
of adjacent-period total firm masses. The decompositions feed equilibrium price
paths one at a time into the firm problem under perfect foresight, evolve the
measure, and recompute the rates, which isolates what each price contributes
to the equilibrium entry and exit responses.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .dynamics import IrfSet, ModelSolution
from .equilibrium import FirmMeasure, SteadyState, step_measure
from .firm import FirmSolution, Prices, solve_firm_stationary, solve_perfect_foresight

NUM_FORMAT = "%.12g"

PRICE_CHANNELS = ("all", "r", "w", "p")


@dataclass(frozen=True)
class RatePath:
    """Entry and exit rates along a path, with the masses behind them.

    Rates are levels; the *_bp fields are basis-point deviations from the
    stationary rates. exit_mass[t] is the mass choosing at date t to exit,
    entrant_mass[t] the mass entering (paying) at t, gamma[t] the total
    operating mass.
    """

    exit_rate: np.ndarray
    entry_rate: np.ndarray
    exit_rate_bp: np.ndarray
    entry_rate_bp: np.ndarray
    exit_mass: np.ndarray
    entrant_mass: np.ndarray
    gamma: np.ndarray
    stationary_exit_rate: float
    stationary_entry_rate: float


def measure_rates(
    measure_path: list[FirmMeasure],
    solution_path: list[FirmSolution],
    entrant_scale: float,
    chain,
    stationary: tuple[float, float] | None = None,
) -> RatePath:
    """Survey-convention rates from aligned measure and firm-solution paths.

    exit rate_t = exiting mass_t / (0.5 (Gamma_t + Gamma_{t+1})), with the
    exiting mass decided at t; entry rate_t = entrant mass_t /
    (0.5 (Gamma_{t-1} + Gamma_t)). Off the ends of the path the total mass is
    extended with its boundary value (paths start and end at the stationary
    equilibrium).
    """
    if len(measure_path) != len(solution_path):
        raise ValueError("measure and solution paths are not aligned")
    T = len(measure_path)
    gamma = np.array([m.total for m in measure_path])
    if np.any(gamma <= 0.0):
        raise ValueError("total firm mass must stay positive")
    exit_mass = np.array(
        [(1.0 - solution_path[t].survival) @ measure_path[t].mass for t in range(T)]
    )
    entrant_mass = np.array(
        [entrant_scale * solution_path[t].entry_prob @ chain.entrant_dist for t in range(T)]
    )
    gamma_next = np.append(gamma[1:], gamma[-1])
    gamma_prev = np.concatenate([[gamma[0]], gamma[:-1]])
    exit_rate = exit_mass / (0.5 * (gamma + gamma_next))
    entry_rate = entrant_mass / (0.5 * (gamma_prev + gamma))
    if stationary is None:
        stat_exit, stat_entry = exit_rate[-1], entry_rate[-1]
    else:
        stat_exit, stat_entry = stationary
    return RatePath(
        exit_rate=exit_rate,
        entry_rate=entry_rate,
        exit_rate_bp=1e4 * (exit_rate - stat_exit),
        entry_rate_bp=1e4 * (entry_rate - stat_entry),
        exit_mass=exit_mass,
        entrant_mass=entrant_mass,
        gamma=gamma,
        stationary_exit_rate=float(stat_exit),
        stationary_entry_rate=float(stat_entry),
    )


@dataclass(frozen=True)
class TfpPath:
    """Total-mass and productivity-aggregate decomposition of aggregate TFP."""

    gamma: np.ndarray
    productivity_aggregate: np.ndarray  # E_z[z^(1/(1-nu))] under mu_t / Gamma_t
    tfp: np.ndarray

    def identity_residual(self, nu: float) -> np.ndarray:
        return self.tfp - (self.gamma * self.productivity_aggregate) ** (1.0 - nu)


def tfp_path(measure_path: list[FirmMeasure], chain, nu: float) -> TfpPath:
    """Aggregate TFP A_t = [Gamma_t E_z(z^(1/(1-nu)))]^(1-nu) along a measure path."""
    weights = chain.levels ** (1.0 / (1.0 - nu))
    gamma = np.array([m.total for m in measure_path])
    if np.any(np.asarray([m.mass.min() for m in measure_path]) < -1e-12):
        raise ValueError("masses must be nonnegative")
    S = np.array([weights @ m.mass for m in measure_path])
    return TfpPath(gamma=gamma, productivity_aggregate=S / gamma, tfp=S ** (1.0 - nu))


def price_path_from_irf(
    irf: IrfSet,
    ss: SteadyState,
    channels: tuple[str, ...] = ("r", "w", "p"),
    horizon: int | None = None,
) -> list[Prices]:
    """Dated prices moving the selected channels along their equilibrium responses.

    The real-rate channel enters the firm problem through the one-period
    discount factor, whose log deviation is minus the ex ante real rate's.
    """
    H = len(irf.horizons) - 1 if horizon is None else horizon
    r_hat = irf.series["real_rate"][: H + 1] / 100.0
    w_hat = irf.series["real_wage"][: H + 1] / 100.0
    p_hat = irf.series["rel_price"][: H + 1] / 100.0
    path = []
    for t in range(H + 1):
        path.append(
            Prices(
                p=ss.prices.p * np.exp(p_hat[t] if "p" in channels else 0.0),
                w=ss.prices.w * np.exp(w_hat[t] if "w" in channels else 0.0),
                sdf=ss.params.beta * np.exp(-r_hat[t] if "r" in channels else 0.0),
            )
        )
    return path


def simulate_measure_path(
    ss: SteadyState, solution_path: list[FirmSolution]
) -> list[FirmMeasure]:
    """Measure evolution under a perfect-foresight firm-solution path.

    Survival into date 0 was decided before the path started, so the first
    step applies stationary survival; entrants respond from date 0 on (one
    period later under delayed entry, where date-0 entrants were also decided
    in advance).
    """
    chain = ss.env.chain
    variant = ss.params.variant
    M = ss.measure.entrant_scale
    delayed = variant.delayed_entry
    path = []
    entry0 = ss.firm.entry_prob if delayed else solution_path[0].entry_prob
    current = step_measure(ss.measure, ss.firm.survival, entry0, chain, M, variant)
    path.append(current)
    for t in range(len(solution_path) - 1):
        entry_next = solution_path[t] if delayed else solution_path[t + 1]
        current = step_measure(
            current, solution_path[t].survival, entry_next.entry_prob, chain, M, variant
        )
        path.append(current)
    return path


def price_contributions(
    irf: IrfSet,
    ss: SteadyState,
    horizon: int = 200,
    tail_tolerance: float = 1e-6,
) -> dict[str, RatePath]:
    """Entry/exit rate responses attributable to each price, and to all jointly.

    For each channel the equilibrium path of that price alone is fed into the
    firm problem with perfect foresight; thresholds, the measure, and the
    rates are recomputed. Raises if the horizon is too short for prices to
    have returned to the stationary equilibrium.
    """
    H = min(horizon, len(irf.horizons) - 1)
    tail = max(
        abs(irf.series[name][H]) / 100.0 for name in ("real_rate", "real_wage", "rel_price")
    )
    if tail > tail_tolerance:
        raise ValueError(
            f"price paths still {tail:.2e} from the stationary equilibrium at horizon {H}; "
            "lengthen the horizon"
        )
    agg = ss.aggregates
    stationary = (agg.quarterly_exit_rate, agg.quarterly_entry_rate)
    out: dict[str, RatePath] = {}
    for channel in PRICE_CHANNELS:
        channels = ("r", "w", "p") if channel == "all" else (channel,)
        prices = price_path_from_irf(irf, ss, channels, H)
        sols = solve_perfect_foresight(ss.env, prices, ss.firm, beta=ss.params.beta)
        measures = simulate_measure_path(ss, sols)
        out[channel] = measure_rates(
            measures, sols, ss.measure.entrant_scale, ss.env.chain, stationary
        )
    return out


def employment_gap_rf_prices(
    rf_irf: IrfSet, hf_irf: IrfSet, ss: SteadyState, horizon: int = 120
) -> dict[str, np.ndarray]:
    """Employment responses beyond the representative-firm benchmark.

    "direct": labour demanded by the heterogeneous firms when they face the
    benchmark model's price paths (perfect foresight), minus the benchmark
    employment response. "equilibrium": the gap between the two models'
    equilibrium employment responses. Both in percentage points of employment.
    """
    H = min(horizon, len(rf_irf.horizons) - 1, len(hf_irf.horizons) - 1)
    prices = price_path_from_irf(rf_irf, ss, ("r", "w", "p"), H)
    sols = solve_perfect_foresight(ss.env, prices, ss.firm, beta=ss.params.beta)
    measures = simulate_measure_path(ss, sols)
    N_ss = ss.aggregates.employment
    n_direct = np.array([sols[t].labor @ measures[t].mass for t in range(H + 1)])
    direct = 100.0 * np.log(n_direct / N_ss) - rf_irf.series["employment"][: H + 1]
    equilibrium = hf_irf.series["employment"][: H + 1] - rf_irf.series["employment"][: H + 1]
    return {"direct": direct, "equilibrium": equilibrium, "horizons": np.arange(H + 1)}


def distribution_shift(
    mass_path: np.ndarray, stationary_mass: np.ndarray, horizons: list[int]
) -> dict[int, np.ndarray]:
    """Shift of the normalized productivity distribution at selected horizons.

    Returns mu_h(z)/Gamma_h - mu_ss(z)/Gamma_ss per grid point; each delta
    sums to zero by construction.
    """
    mass_path = np.asarray(mass_path, dtype=float)
    if max(horizons) >= mass_path.shape[0]:
        raise ValueError("requested horizon beyond the simulated path")
    base = stationary_mass / stationary_mass.sum()
    out = {}
    for h in horizons:
        mu = mass_path[h]
        out[h] = mu / mu.sum() - base
    return out


def irf_mass_path(model: ModelSolution, irf: IrfSet) -> np.ndarray:
    """Per-point mass levels along a linearized impulse response."""
    return model.system.ss.measure.mass[None, :] + model.system.mass_levels(irf.dev_path)


def entry_exit_job_contributions(rates: RatePath, ss: SteadyState) -> dict[str, np.ndarray]:
    """Cumulated jobs destroyed by extra exit and not created by missing entry.

    Flow deviations are valued at the stationary average sizes of exiting and
    entering firms, then cumulated; units are levels of employment.
    """
    chain = ss.env.chain
    entrants_ss = ss.measure.entrant_scale * ss.firm.entry_prob * chain.entrant_dist
    avg_entrant_size = ss.firm.labor @ entrants_ss / entrants_ss.sum()
    exit_mass_ss = (1.0 - ss.firm.survival) * ss.measure.mass
    avg_exit_size = ss.firm.labor @ exit_mass_ss / exit_mass_ss.sum()
    jobs_lost_exit = np.cumsum((rates.exit_mass - exit_mass_ss.sum()) * avg_exit_size)
    jobs_lost_entry = np.cumsum(-(rates.entrant_mass - entrants_ss.sum()) * avg_entrant_size)
    return {"from_exit": jobs_lost_exit, "from_missing_entry": jobs_lost_entry}


# ---------------------------------------------------------------------------
# figure-analogue CSV emitters


def profiles_csv(ss: SteadyState, bump: float = 0.01) -> str:
    """Stationary entry/exit probability profiles, and with one price raised at a time.

    `bump` is the log-point increase applied to each price (the rate bump
    lowers the discount factor by the same log amount).
    """
    beta = ss.params.beta
    base = ss.prices
    variations = {
        "base": base,
        "high_r": Prices(p=base.p, w=base.w, sdf=base.sdf * np.exp(-bump)),
        "high_w": Prices(p=base.p, w=base.w * np.exp(bump), sdf=base.sdf),
        "high_p": Prices(p=base.p * np.exp(bump), w=base.w, sdf=base.sdf),
    }
    profiles = {}
    for name, prices in variations.items():
        sol = solve_firm_stationary(ss.env, prices, beta=beta)
        profiles[name] = (1.0 - sol.survival, sol.entry_prob)
    buf = io.StringIO()
    header = ["z"]
    for name in variations:
        header += [f"exit_prob_{name}", f"entry_prob_{name}"]
    buf.write(",".join(header) + "\n")
    for i, z in enumerate(ss.env.chain.levels):
        row = [z]
        for name in variations:
            row += [profiles[name][0][i], profiles[name][1][i]]
        buf.write(",".join(NUM_FORMAT % v for v in row) + "\n")
    return buf.getvalue()


SIZE_CLASSES = ((0.0, 20.0), (20.0, 100.0), (100.0, 500.0), (500.0, np.inf))


def size_distribution_csv(ss: SteadyState) -> str:
    """Firm and employment shares plus entry/exit rates by size class."""
    n = ss.firm.labor
    mass = ss.measure.mass
    chain = ss.env.chain
    entrants = ss.measure.entrant_scale * ss.firm.entry_prob * chain.entrant_dist
    exit_mass = (1.0 - ss.firm.survival) * mass
    buf = io.StringIO()
    buf.write("size_lo,size_hi,firm_share,employment_share,exit_rate,entry_rate\n")
    for lo, hi in SIZE_CLASSES:
        sel = (n >= lo) & (n < hi)
        cls_mass = mass[sel].sum()
        row = (
            lo,
            hi if np.isfinite(hi) else -1.0,
            cls_mass / mass.sum(),
            (n[sel] @ mass[sel]) / (n @ mass),
            exit_mass[sel].sum() / cls_mass if cls_mass > 0.0 else 0.0,
            entrants[sel].sum() / cls_mass if cls_mass > 0.0 else 0.0,
        )
        buf.write(",".join(NUM_FORMAT % v for v in row) + "\n")
    return buf.getvalue()


def contributions_csv(contribs: dict[str, RatePath], horizon: int = 40) -> str:
    buf = io.StringIO()
    cols = ["horizon"]
    for channel in PRICE_CHANNELS:
        cols += [f"exit_{channel}_bp", f"entry_{channel}_bp"]
    buf.write(",".join(cols) + "\n")
    for t in range(horizon + 1):
        row = [str(t)]
        for channel in PRICE_CHANNELS:
            row += [
                NUM_FORMAT % contribs[channel].exit_rate_bp[t],
                NUM_FORMAT % contribs[channel].entry_rate_bp[t],
            ]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def gaps_csv(gaps: dict[str, np.ndarray], horizon: int = 40) -> str:
    buf = io.StringIO()
    buf.write("horizon,labor_demand_gap_pp,equilibrium_gap_pp\n")
    H = min(horizon, len(gaps["direct"]) - 1)
    for t in range(H + 1):
        buf.write(
            ",".join([str(t), NUM_FORMAT % gaps["direct"][t], NUM_FORMAT % gaps["equilibrium"][t]])
            + "\n"
        )
    return buf.getvalue()


def distribution_shift_csv(ss: SteadyState, deltas: dict[int, np.ndarray]) -> str:
    buf = io.StringIO()
    horizons = sorted(deltas)
    buf.write("z," + ",".join(f"delta_h{h}" for h in horizons) + "\n")
    for i, z in enumerate(ss.env.chain.levels):
        row = [NUM_FORMAT % z] + [NUM_FORMAT % deltas[h][i] for h in horizons]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
