"""Exact model-averaged posterior for binned binary regression.

Binning the covariate into m equal cells reduces each working model to
m independent Bernoulli problems, so the uniform within-model prior
has Beta-function evidence in closed form and conjugate Beta bin
posteriors.  Log-odds within-model priors get adaptive quadrature for
the evidence and tabulated bin posteriors on a fixed grid.  A small
exact enumeration oracle checks the posterior-mass bound on finite
spaces by brute force.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import betaln, expit, logsumexp

from .divergence import (DiscreteDensity, QuadratureError, RegressionDensity,
                         d_t_squared)
from .models import Dataset, PriorSpec, TrueModel, WithinModelPrior, log_odds_to_mean
from .rate_bounds import posterior_mass_bound_rhs

__all__ = [
    "BinnedCounts",
    "PosteriorState",
    "DivergenceSummary",
    "OracleResult",
    "bin_counts",
    "log_evidence",
    "model_posterior",
    "sample_posterior_density",
    "empirical_divergence_quantiles",
    "exact_enumeration_oracle",
    "random_oracle_config",
]

_GRID_LO, _GRID_HI, _GRID_POINTS = -12.0, 12.0, 2048
_EVIDENCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BinnedCounts:
    """Per-bin trial and success counts for one model size."""

    m: int
    trials: np.ndarray
    successes: np.ndarray

    def __post_init__(self):
        trials = np.asarray(self.trials, dtype=np.int64)
        succ = np.asarray(self.successes, dtype=np.int64)
        if trials.shape != (self.m,) or succ.shape != (self.m,):
            raise ValueError("counts must be 1-d arrays of length m")
        if np.any(succ < 0) or np.any(succ > trials):
            raise ValueError("successes must lie in [0, trials] per bin")
        trials = trials.copy(); trials.setflags(write=False)
        succ = succ.copy(); succ.setflags(write=False)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "successes", succ)

    @property
    def n(self) -> int:
        return int(self.trials.sum())


def bin_counts(data: Dataset, m: int) -> BinnedCounts:
    """Tally the dataset into m equal covariate bins.

    Bins are right-open [(j-1)/m, j/m); the point x = 1 joins bin m.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    idx = np.minimum((data.x * m).astype(np.int64), m - 1)
    trials = np.bincount(idx, minlength=m)
    successes = np.bincount(idx, weights=data.z, minlength=m).astype(np.int64)
    return BinnedCounts(m=m, trials=trials, successes=successes)


def log_evidence(counts: BinnedCounts, within: WithinModelPrior) -> float:
    """Log marginal likelihood of one model's binned counts.

    Uniform within-model prior: sum of ln B(1 + s_j, 1 + f_j) in closed
    form.  Log-odds priors: per-bin adaptive quadrature on the log-odds
    scale, peak-shifted for stability, with a 1e-10 relative tolerance.
    """
    s = counts.successes
    f = counts.trials - counts.successes
    if within.kind == "uniform":
        return float(np.sum(betaln(1 + s, 1 + f)))
    total = 0.0
    for sj, fj in zip(s.tolist(), f.tolist()):
        total += _log_odds_bin_evidence(sj, fj, within)
    return total


def _log_odds_bin_loglik(theta, s: int, f: int):
    theta = np.asarray(theta, dtype=float)
    # ln sigma(theta) = -ln(1 + e^(-theta)), stable in both tails
    return -s * np.logaddexp(0.0, -theta) - f * np.logaddexp(0.0, theta)


def _log_odds_bin_evidence(s: int, f: int, within: WithinModelPrior) -> float:
    if s == 0 and f == 0:
        return 0.0
    log_target = lambda th: _log_odds_bin_loglik(th, s, f) + within.log_pdf(th)
    seed = np.linspace(-40.0, 40.0, 1025)
    vals = log_target(seed)
    mode = float(seed[int(np.argmax(vals))])
    curvature = max((s + f) * 0.25, 1e-2)
    width = 1.0 / math.sqrt(curvature)
    lo = mode - 30.0 * width - 30.0 * within.scale
    hi = mode + 30.0 * width + 30.0 * within.scale
    peak = float(log_target(np.array([mode]))[0])
    integrand = lambda th: float(np.exp(log_target(np.array([th]))[0] - peak))
    val, err = quad(integrand, lo, hi, points=[mode], limit=200,
                    epsabs=1e-14, epsrel=1e-12)
    if val <= 0 or err > _EVIDENCE_TOL * max(val, 1e-300):
        raise QuadratureError(
            f"bin evidence quadrature missed tolerance {_EVIDENCE_TOL}")
    return peak + math.log(val)


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """Exact posterior over model sizes plus per-model bin counts.

    Bin-level posteriors are conjugate Beta(1 + s, 1 + f) under the
    uniform prior and tabulated on a fixed log-odds grid otherwise;
    they are materialized lazily while sampling.
    """

    spec: PriorSpec
    log_weights: np.ndarray
    weights: np.ndarray
    counts: tuple

    @property
    def model_sizes(self) -> np.ndarray:
        return np.arange(1, self.spec.m_max + 1)

    @property
    def mode(self) -> int:
        return int(np.argmax(self.weights)) + 1


def model_posterior(data: Dataset, spec: PriorSpec) -> PosteriorState:
    """Posterior model weights w_m proportional to pi_m * evidence_m,
    accumulated in log space.  An empty dataset reproduces the prior."""
    from .models import model_log_prior

    counts = tuple(bin_counts(data, m) for m in range(1, spec.m_max + 1))
    log_prior = model_log_prior(spec)
    log_post = log_prior + np.array([log_evidence(c, spec.within) for c in counts])
    log_post = log_post - logsumexp(log_post)
    weights = np.exp(log_post)
    weights = weights / weights.sum()
    if abs(float(weights.sum()) - 1.0) > 1e-12:
        raise RuntimeError("posterior weights failed to normalize")
    log_post.setflags(write=False)
    weights.setflags(write=False)
    return PosteriorState(spec=spec, log_weights=log_post, weights=weights,
                          counts=counts)


_THETA_GRID = np.linspace(_GRID_LO, _GRID_HI, _GRID_POINTS)


def _bin_posterior_table(s: int, f: int, within: WithinModelPrior):
    """Normalized posterior density table of one bin on the log-odds grid."""
    logp = _log_odds_bin_loglik(_THETA_GRID, s, f) + within.log_pdf(_THETA_GRID)
    logp = logp - logp.max()
    dens = np.exp(logp)
    step = _THETA_GRID[1] - _THETA_GRID[0]
    total = float(np.trapezoid(dens, dx=step))
    if total <= 0:
        raise QuadratureError("bin posterior table vanished")
    dens = dens / total
    check = float(np.trapezoid(dens, dx=step))
    if abs(check - 1.0) > 1e-10:
        raise QuadratureError("bin posterior table failed to normalize")
    return dens, step


def _sample_log_odds_bin(s: int, f: int, within: WithinModelPrior,
                         unit: float) -> float:
    dens, step = _bin_posterior_table(s, f, within)
    cell = 0.5 * (dens[:-1] + dens[1:]) * step
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf = cdf / cdf[-1]
    return float(np.interp(unit, cdf, _THETA_GRID))


def sample_posterior_density(state: PosteriorState, rng) -> RegressionDensity:
    """Draw one working density: a model size from the posterior weights,
    then its bin levels from the bin posteriors."""
    idx = int(rng.choice(state.weights.size, p=state.weights))
    counts = state.counts[idx]
    s = counts.successes
    f = counts.trials - counts.successes
    if state.spec.within.kind == "uniform":
        levels = rng.beta(1.0 + s, 1.0 + f)
    else:
        units = rng.random(counts.m)
        theta = np.array([
            _sample_log_odds_bin(int(s[j]), int(f[j]), state.spec.within, float(units[j]))
            for j in range(counts.m)])
        levels = log_odds_to_mean(theta)
    return RegressionDensity.piecewise(levels)


@dataclass(frozen=True, eq=False)
class DivergenceSummary:
    """Quantiles of posterior-draw divergences from the truth."""

    values: np.ndarray
    min: float
    median: float
    q95: float
    max: float
    epsilon_n: Optional[float]
    exceedance: Optional[float]


def empirical_divergence_quantiles(truth: TrueModel, state: PosteriorState,
                                   u: float, draws: int, rng,
                                   epsilon_n: Optional[float] = None,
                                   ) -> DivergenceSummary:
    """Sample posterior densities and summarize d_{-u}^2(p0, draw)."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    draws = int(draws)
    if draws < 1:
        raise ValueError("draws must be >= 1")
    p0 = truth.density
    values = np.array([
        d_t_squared(p0, sample_posterior_density(state, rng), -u)
        for _ in range(draws)])
    exceed = None
    if epsilon_n is not None:
        exceed = float(np.mean(values > epsilon_n))
    values.setflags(write=False)
    return DivergenceSummary(
        values=values,
        min=float(values.min()),
        median=float(np.median(values)),
        q95=float(np.quantile(values, 0.95)),
        max=float(values.max()),
        epsilon_n=epsilon_n,
        exceedance=exceed)


# ---------------------------------------------------------------------------
# exact enumeration oracle on finite spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    lhs: float
    lhs_power: float
    rhs: float
    holds: bool
    u: float
    t: float
    n: int


def exact_enumeration_oracle(p0: DiscreteDensity, atoms: Sequence[DiscreteDensity],
                             prior_masses: Sequence[float], n: int,
                             event: Sequence[int], anchor: Sequence[int],
                             u: float, t: float,
                             cover: Optional[Sequence[Sequence[int]]] = None,
                             ) -> OracleResult:
    """Brute-force check of the posterior-mass bound on a finite prior.

    Enumerates every dataset of length n, averages the posterior mass of
    the event under the truth, and compares (lhs/4)^(1 + u/t) against
    the covered right-hand side.  Balls default to singletons over the
    event's atoms, which are trivially convex; callers supplying wider
    balls are responsible for their convexity (the worst-case divergence
    is evaluated over the listed members).
    """
    n = int(n)
    if n < 1 or n > 6:
        raise ValueError("enumeration supports 1 <= n <= 6")
    if p0.size > 3:
        raise ValueError("enumeration supports at most 3 outcomes")
    atoms = list(atoms)
    if not 1 <= len(atoms) <= 4:
        raise ValueError("enumeration supports 1 to 4 prior atoms")
    for a in atoms:
        if a.outcomes != p0.outcomes:
            raise ValueError("atoms must share the truth's outcome set")
    masses = np.asarray(prior_masses, dtype=float)
    if masses.shape != (len(atoms),) or np.any(masses <= 0):
        raise ValueError("prior masses must be positive, one per atom")
    if abs(float(masses.sum()) - 1.0) > 1e-12:
        raise ValueError("prior masses must sum to 1")
    event = sorted(set(int(i) for i in event))
    anchor = sorted(set(int(i) for i in anchor))
    if not anchor:
        raise ValueError("anchor set must be nonempty")
    if max(event + anchor) >= len(atoms) or min(event + anchor) < 0:
        raise ValueError("event/anchor indices out of range")

    lik_matrix = np.stack([a.mass for a in atoms])
    lhs = 0.0
    for ys in itertools.product(range(p0.size), repeat=n):
        cols = list(ys)
        truth_prob = float(np.prod(p0.mass[cols]))
        if truth_prob == 0.0:
            continue
        liks = np.prod(lik_matrix[:, cols], axis=1)
        denom = float(np.dot(masses, liks))
        if denom == 0.0:
            raise ValueError("posterior undefined on a dataset the truth can produce")
        numer = float(np.dot(masses[event], liks[event]))
        lhs += truth_prob * numer / denom

    if cover is None:
        cover = [(i,) for i in event]
    entries = []
    for ball in cover:
        ball = [int(i) for i in ball]
        if not ball:
            raise ValueError("cover balls must be nonempty")
        worst = min(d_t_squared(p0, atoms[i], -u) for i in ball)
        entries.append((worst, math.log(float(masses[ball].sum()))))
    sup_d = max(d_t_squared(p0, atoms[i], t) for i in anchor)
    k_term = (sup_d, math.log(float(masses[anchor].sum())))
    rhs = posterior_mass_bound_rhs(entries, k_term, u, t, n)
    lhs_power = (lhs / 4.0) ** (1.0 + u / t)
    holds = lhs_power <= rhs * (1.0 + 1e-9) + 1e-300
    return OracleResult(lhs=lhs, lhs_power=lhs_power, rhs=rhs, holds=holds,
                        u=float(u), t=float(t), n=n)


def _positive_simplex(rng, size: int) -> np.ndarray:
    raw = rng.dirichlet(np.ones(size))
    mass = (raw + 0.2) / (1.0 + 0.2 * size)
    return mass / mass.sum()


def random_oracle_config(rng) -> dict:
    """Randomized small configuration for the enumeration oracle:
    strictly positive masses, singleton-ball cover over a random event,
    and a random anchor set."""
    k = int(rng.integers(2, 4))
    n = int(rng.integers(1, 7))
    n_atoms = int(rng.integers(2, 5))
    p0 = DiscreteDensity(_positive_simplex(rng, k))
    atoms = [DiscreteDensity(_positive_simplex(rng, k)) for _ in range(n_atoms)]
    masses = _positive_simplex(rng, n_atoms)
    event = rng.permutation(n_atoms)[: int(rng.integers(1, n_atoms + 1))]
    anchor = rng.permutation(n_atoms)[: int(rng.integers(1, n_atoms + 1))]
    u = float(rng.choice([0.5, 1.0 / 3.0]))
    t = float(rng.choice([0.5, 1.0, 2.0]))
    return {
        "p0": p0, "atoms": atoms, "prior_masses": masses, "n": n,
        "event": sorted(int(i) for i in event),
        "anchor": sorted(int(i) for i in anchor),
        "u": u, "t": t,
    }
