"""Discretization of the idiosyncratic productivity process and lognormal cost utilities.

The productivity state is an AR(1) in logs, discretized with the Rouwenhorst
method on an evenly spaced grid; the fixed operating and entry costs are
lognormal. Everything downstream (firm problem, stationary equilibrium,
perturbation) works off the objects built here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr


class NonConvergenceError(RuntimeError):
    """An iterative routine failed to reach its tolerance within the cap."""


@dataclass(frozen=True)
class AR1Spec:
    """AR(1) in logs: x' = mean*(1-rho) + rho*x + eps, eps ~ N(0, sigma^2)."""

    rho: float
    sigma: float
    mean: float = 0.0

    def __post_init__(self):
        if not abs(self.rho) < 1.0:
            raise ValueError(f"AR(1) persistence must satisfy |rho| < 1, got {self.rho}")
        if not self.sigma > 0.0:
            raise ValueError(f"AR(1) innovation std must be positive, got {self.sigma}")

    @property
    def sigma_uncond(self) -> float:
        """Unconditional standard deviation sigma / sqrt(1 - rho^2)."""
        return self.sigma / np.sqrt(1.0 - self.rho**2)


@dataclass(frozen=True)
class MarkovChain:
    """Evenly spaced log-productivity grid with transition matrix and entrant draw distribution.

    Attributes
    ----------
    log_grid : (k,) strictly increasing, evenly spaced log-productivity points
    transition : (k, k) row-stochastic matrix, transition[i, j] = Pr(z' = z_j | z = z_i)
    entrant_dist : (k,) distribution from which potential entrants draw productivity
    """

    log_grid: np.ndarray
    transition: np.ndarray
    entrant_dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "log_grid", np.asarray(self.log_grid, dtype=float))
        object.__setattr__(self, "transition", np.asarray(self.transition, dtype=float))
        object.__setattr__(self, "entrant_dist", np.asarray(self.entrant_dist, dtype=float))
        k = self.log_grid.size
        if self.transition.shape != (k, k) or self.entrant_dist.shape != (k,):
            raise ValueError("grid, transition matrix and entrant distribution sizes disagree")
        steps = np.diff(self.log_grid)
        if k > 1 and not (np.all(steps > 0) and np.allclose(steps, steps[0], rtol=1e-10, atol=1e-12)):
            raise ValueError("log grid must be strictly increasing and evenly spaced")
        if np.any(self.transition < -1e-15) or np.any(self.transition > 1 + 1e-15):
            raise ValueError("transition probabilities outside [0, 1]")
        if np.max(np.abs(self.transition.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition matrix rows must sum to 1")
        if abs(self.entrant_dist.sum() - 1.0) > 1e-12 or np.any(self.entrant_dist < -1e-15):
            raise ValueError("entrant distribution must be a probability vector")

    @property
    def k(self) -> int:
        return self.log_grid.size

    @property
    def levels(self) -> np.ndarray:
        """Productivity levels exp(log grid)."""
        return np.exp(self.log_grid)


@dataclass(frozen=True)
class LognormalSpec:
    """Lognormal distribution LN(mu, sigma) for fixed cost draws."""

    mu: float
    sigma: float

    def __post_init__(self):
        # sigma -> 0 degenerates to a point mass; out of contract here.
        if not self.sigma > 1e-12:
            raise ValueError(f"lognormal scale must exceed 1e-12, got {self.sigma}")

    def shifted(self, delta: float) -> "LognormalSpec":
        """Same scale with the location moved by `delta` (log units)."""
        return LognormalSpec(self.mu + delta, self.sigma)


def rouwenhorst(spec: AR1Spec, k: int) -> MarkovChain:
    """Discretize an AR(1) in logs on a k-point grid by the Rouwenhorst method.

    The grid spans mean +/- sigma_uncond*sqrt(k-1) with even spacing, and the
    transition matrix is the standard two-parameter recursion with
    p = q = (1+rho)/2, which reproduces the persistence rho exactly and has a
    binomial(k-1, 1/2) stationary distribution. The entrant draw distribution
    is set to that stationary distribution, so entrants face the same
    unconditional distribution as incumbents.
    """
    if k < 2:
        raise ValueError(f"Rouwenhorst needs at least 2 grid points, got {k}")
    p = (1.0 + spec.rho) / 2.0
    P = np.array([[p, 1.0 - p], [1.0 - p, p]])
    for n in range(3, k + 1):
        padded = np.zeros((n, n))
        padded[:-1, :-1] += p * P
        padded[:-1, 1:] += (1.0 - p) * P
        padded[1:, :-1] += (1.0 - p) * P
        padded[1:, 1:] += p * P
        padded[1:-1, :] /= 2.0
        P = padded
    # Exact row renormalization guards against accumulated rounding.
    P /= P.sum(axis=1, keepdims=True)
    span = spec.sigma_uncond * np.sqrt(k - 1.0)
    log_grid = np.linspace(spec.mean - span, spec.mean + span, k)
    entrant = binomial_dist(k)
    return MarkovChain(log_grid=log_grid, transition=P, entrant_dist=entrant)


def binomial_dist(k: int) -> np.ndarray:
    """Binomial(k-1, 1/2) pmf, the Rouwenhorst stationary distribution."""
    # Pascal recursion in log space is unnecessary for k <= a few hundred.
    pmf = np.array([1.0])
    for _ in range(k - 1):
        pmf = 0.5 * (np.pad(pmf, (1, 0)) + np.pad(pmf, (0, 1)))
    return pmf


def chain_stationary(P: np.ndarray, tol: float = 1e-14, maxiter: int = 200_000) -> np.ndarray:
    """Stationary distribution pi = pi P of a row-stochastic matrix, by power iteration."""
    P = np.asarray(P, dtype=float)
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-10:
        raise ValueError("transition matrix is not row-stochastic")
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    PT = P.T.copy()
    for _ in range(maxiter):
        pi_new = PT @ pi
        if np.max(np.abs(pi_new - pi)) < tol:
            pi_new = np.maximum(pi_new, 0.0)
            return pi_new / pi_new.sum()
        pi = pi_new
    raise NonConvergenceError(
        f"stationary distribution did not converge within {maxiter} iterations "
        "(chain may be reducible or periodic)"
    )


def quarterly_from_annual(rho_annual: float, sigma_annual: float, nu: float) -> tuple[float, float]:
    """Map an annual firm-employment AR(1) to the quarterly log-productivity process.

    Log employment inherits the AR(1) structure of log productivity with
    innovations scaled by 1/(nu-1), so an annual employment process with
    persistence rho_annual and innovation std sigma_annual implies

        rho_q   = rho_annual**(1/4)
        sigma_q = |nu - 1| * sqrt(sigma_annual**2 / sum_{j=0..3} rho_q**(2j))

    The magnitude is taken on the (nu - 1) factor so the returned std is
    positive under decreasing returns.
    """
    if not 0.0 < rho_annual < 1.0:
        raise ValueError(f"annual persistence must lie in (0, 1), got {rho_annual}")
    if not sigma_annual > 0.0:
        raise ValueError(f"annual innovation std must be positive, got {sigma_annual}")
    if not 0.0 < nu < 1.0:
        raise ValueError(f"returns-to-scale parameter must lie in (0, 1), got {nu}")
    rho_q = rho_annual ** 0.25
    window = sum(rho_q ** (2 * j) for j in range(4))
    sigma_q = abs(nu - 1.0) * np.sqrt(sigma_annual**2 / window)
    return rho_q, sigma_q


def lognormal_cdf(spec: LognormalSpec, x) -> np.ndarray | float:
    """CDF of LN(mu, sigma); zero on the nonpositive half-line."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(divide="ignore"):
        out[pos] = ndtr((np.log(x[pos]) - spec.mu) / spec.sigma)
    return out if out.ndim else float(out)


def lognormal_pdf(spec: LognormalSpec, x) -> np.ndarray | float:
    """Density of LN(mu, sigma); zero on the nonpositive half-line."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    a = (np.log(xp) - spec.mu) / spec.sigma
    out[pos] = np.exp(-0.5 * a * a) / (xp * spec.sigma * np.sqrt(2.0 * np.pi))
    return out if out.ndim else float(out)


def truncated_lognormal_mean(spec: LognormalSpec, cap) -> np.ndarray | float:
    """E[x | x <= cap] for x ~ LN(mu, sigma).

    Uses exp(mu + sigma^2/2) * Phi(a - sigma) / Phi(a) with a = (ln cap - mu)/sigma,
    evaluated through log Phi so the ratio stays finite far into the lower tail.
    """
    cap = np.asarray(cap, dtype=float)
    if np.any(cap <= 0.0):
        raise ValueError("truncation point must be positive")
    a = (np.log(cap) - spec.mu) / spec.sigma
    out = np.exp(spec.mu + 0.5 * spec.sigma**2 + log_ndtr(a - spec.sigma) - log_ndtr(a))
    return out if out.ndim else float(out)


def partial_expectation(spec: LognormalSpec, cap) -> np.ndarray | float:
    """E[x * 1{x <= cap}] for x ~ LN(mu, sigma), zero for cap <= 0.

    Equals the truncated mean times the CDF at the cap; this product form has
    no 0/0 ambiguity in the lower tail.
    """
    cap = np.asarray(cap, dtype=float)
    out = np.zeros_like(cap)
    pos = cap > 0.0
    a = (np.log(cap[pos]) - spec.mu) / spec.sigma
    out[pos] = np.exp(spec.mu + 0.5 * spec.sigma**2 + log_ndtr(a - spec.sigma))
    return out if out.ndim else float(out)


def expected_cost_gain(spec: LognormalSpec, cap) -> np.ndarray | float:
    """E[max(cap - x, 0)] for x ~ LN(mu, sigma), with cap <= 0 mapped to 0.

    This is the option-value term cap*G(cap) - E[x | x <= cap]*G(cap) of the
    continuation decision; its derivative in cap is the CDF G(cap).
    """
    cap = np.asarray(cap, dtype=float)
    out = np.zeros_like(cap)
    pos = cap > 0.0
    cp = cap[pos]
    a = (np.log(cp) - spec.mu) / spec.sigma
    out[pos] = cp * ndtr(a) - np.exp(spec.mu + 0.5 * spec.sigma**2 + log_ndtr(a - spec.sigma))
    return out if out.ndim else float(out)
