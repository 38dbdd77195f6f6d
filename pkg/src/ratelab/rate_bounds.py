"""Assembled convergence-rate bounds for the posterior sequence.

epsilon_n adds the penalized divergence of the prior to a complexity
term n^(-1) * ln(N^(1/u) * n^(2*(1/u + 1/t))), where N measures the
richness of the prior support: a plain cover count, its model-mixture
refinement, or the prior-weighted norm complexity.  The variant tags
(prop3, prop7, remark8, remark10) are the stable interface names of
those four assembly rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "VARIANTS",
    "RateBoundBreakdown",
    "floor_to_unit_fraction",
    "bound_prefactor",
    "posterior_mass_bound_rhs",
    "rate_bound",
]

# prop3: one cover count for the whole prior support
# prop7: per-model cover counts mixed as sum_m pi_m^u * count_m
# remark8 / remark10: prior-weighted norm complexity (remark10 is the
#   mixture aggregation of per-model remark8 values)
VARIANTS = ("prop3", "prop7", "remark8", "remark10")


@dataclass(frozen=True)
class RateBoundBreakdown:
    """epsilon_n = penalized_div + complexity_term, with provenance.

    ``log_richness`` is ln N for the variant's richness measure N;
    ``provenance`` records the L1-ball radius lambda = n^(-1/u), the
    slack eps - delta = 4/(n*u) that produces it, and the e^4 factor
    that cancels against that slack in the assembly.
    """

    variant: str
    u: float
    t: float
    n: int
    penalized_div: float
    complexity_term: float
    epsilon_n: float
    log_richness: float
    provenance: dict = field(default_factory=dict)


def floor_to_unit_fraction(u_raw: float) -> float:
    """Largest u = 1/k (k a positive integer) with u <= u_raw.

    Robust to float noise: reciprocals within 1e-9 of an integer snap
    to that integer instead of tipping to the next one.
    """
    u_raw = float(u_raw)
    if not 0.0 < u_raw < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u_raw}")
    k = math.ceil(1.0 / u_raw - 1e-9)
    return 1.0 / k


def bound_prefactor(u: float, t: float) -> float:
    """Constant c(u, t) multiplying the posterior-mass bound; at most 4
    throughout 0 < u < 1, t > 0."""
    u, t = float(u), float(t)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    a = t / (t + u)
    b = u / (t + u)

    def _x_pow_neg_x(x):
        return 1.0 if x == 0.0 else x ** (-x)

    third = (u ** u * (1.0 - u) ** (1.0 - u)) ** (-t / (u + t))
    return _x_pow_neg_x(a) * _x_pow_neg_x(b) * third


def posterior_mass_bound_rhs(cover: Sequence, anchor, u: float, t: float,
                             n: int) -> float:
    """Right-hand side of the posterior-mass bound for a covered event.

    ``cover`` lists (worst-case d_{-u}^2 over the ball, ln prior mass of
    the ball); ``anchor`` is (best-case d_t^2 over the anchor set, ln
    prior mass of the anchor set).  Each ball contributes
    exp(-u * n * ([inf d_{-u}^2 - ln pi(B)/n] - [sup d_t^2 - ln pi(K)/n]))
    and the terms are accumulated in log space.
    """
    u, t = float(u), float(t)
    n = int(n)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if n < 1:
        raise ValueError("n must be >= 1")
    sup_d, log_anchor_mass = float(anchor[0]), float(anchor[1])
    if math.isinf(sup_d):
        return math.inf
    exponents = []
    for inf_d, log_mass in cover:
        inf_d, log_mass = float(inf_d), float(log_mass)
        if math.isinf(inf_d):
            continue  # an unreachable ball contributes exp(-inf) = 0
        exponents.append(-u * (n * inf_d - log_mass - n * sup_d + log_anchor_mass))
    if not exponents:
        return 0.0
    total = float(logsumexp(np.asarray(exponents)))
    try:
        return math.exp(total)
    except OverflowError:
        return math.inf


def _complexity_from_log_richness(log_richness: float, u: float, t: float,
                                  n: int) -> float:
    return (log_richness / u + 2.0 * (1.0 / u + 1.0 / t) * math.log(n)) / n


def rate_bound(variant: str, u: float, t: float, n: int, penalized_div: float,
               *, log_cover_count: Optional[float] = None,
               model_log_masses: Optional[Sequence[float]] = None,
               model_log_covers: Optional[Sequence[float]] = None,
               log_norm_complexity: Optional[float] = None,
               ) -> RateBoundBreakdown:
    """Assemble epsilon_n for the requested variant.

    prop3 consumes ``log_cover_count`` (ln of one cover count); prop7
    consumes per-model ``model_log_masses`` and ``model_log_covers``;
    remark8 and remark10 consume ``log_norm_complexity``.  In the norm
    variants the complexity enters without the extra 1/u power because
    the norm already carries it.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    u, t = float(u), float(t)
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    k = 1.0 / u
    if abs(k - round(k)) > 1e-9:
        raise ValueError(f"u must be the reciprocal of an integer, got {u}")
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not penalized_div >= 0.0:
        raise ValueError("penalized divergence must be nonnegative")

    if variant == "prop3":
        if log_cover_count is None:
            raise ValueError("prop3 needs log_cover_count")
        log_richness = float(log_cover_count)
        if log_richness < -1e-12:
            raise ValueError("cover count must be >= 1")
        complexity = _complexity_from_log_richness(log_richness, u, t, n)
    elif variant == "prop7":
        if model_log_masses is None or model_log_covers is None:
            raise ValueError("prop7 needs model_log_masses and model_log_covers")
        lm = np.asarray(model_log_masses, dtype=float)
        lc = np.asarray(model_log_covers, dtype=float)
        if lm.shape != lc.shape or lm.ndim != 1 or lm.size == 0:
            raise ValueError("model masses and covers must be matching 1-d arrays")
        if np.any(lc < -1e-12):
            raise ValueError("cover counts must be >= 1")
        log_richness = float(logsumexp(u * lm + lc))
        complexity = _complexity_from_log_richness(log_richness, u, t, n)
    else:
        if log_norm_complexity is None:
            raise ValueError(f"{variant} needs log_norm_complexity")
        log_richness = float(log_norm_complexity)
        if log_richness < -1e-12:
            raise ValueError("norm complexity must be >= 1")
        complexity = (log_richness + 2.0 * (1.0 / u + 1.0 / t) * math.log(n)) / n

    return RateBoundBreakdown(
        variant=variant, u=u, t=t, n=n,
        penalized_div=float(penalized_div),
        complexity_term=complexity,
        epsilon_n=float(penalized_div) + complexity,
        log_richness=log_richness,
        provenance={
            "l1_radius": n ** (-1.0 / u),
            "eps_minus_delta": 4.0 / (n * u),
            "log_e4_factor": 4.0,
        })
