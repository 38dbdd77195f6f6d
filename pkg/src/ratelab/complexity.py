"""Covering numbers and prior norm complexities of the model family.

Two complexity notions feed the rate bounds: plain covering numbers of
the level space by L1 balls of radius n^(-1/u), and a prior-weighted
complexity obtained by summing prior-cell masses raised to the power u
over an equispaced grid of cells.  The grid spacing on the level scale
is h = 4 * n^(-1/u); the constants that relate grid spacing to the
L1-ball radius on each scale are recorded in the summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .divergence import QuadratureError
from .models import WithinModelPrior

__all__ = [
    "CoverSummary",
    "ParametricComplexity",
    "covering_number_uniform",
    "log_covering_number_uniform",
    "norm_complexity_grid",
    "log_norm_complexity_analytic",
    "norm_complexity_mixture",
    "log_norm_complexity_mixture",
    "parametric_norm_complexity_bound",
]

# L1 vs level-scale constants: on the mean scale the L1 distance is at
# most twice the sup level gap; on the log-odds scale it is at most half
# the sup gap (the logistic map is 1/4-Lipschitz).
SCALE_CONSTANTS = {"mean": 2.0, "log_odds": 0.5}

_TAIL_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class CoverSummary:
    """Cell-sum complexity of one m-level working model.

    ``lu_norm_sum`` is the sum of cell-mass^u over the product cells
    (>= 1 by concavity) and ``lu_norm`` its (1/u)-th power; log values
    are carried alongside because the linear ones overflow for large m.
    """

    radius: float
    ball_count: float
    lu_norm_sum: float
    lu_norm: float
    log_lu_norm_sum: float
    log_lu_norm: float
    per_coordinate_sum: float
    grid_spacing: float
    analytic_bound: float
    log_analytic_bound: float
    scale: str
    scale_constant: float
    m: int
    u: float
    n: int


@dataclass(frozen=True)
class ParametricComplexity:
    """Closed-form norm-complexity bound of a d-parameter family."""

    bound: float
    log_bound: float
    complexity_term: float


def _unit_fraction(u: float) -> int:
    k = 1.0 / u
    k_round = round(k)
    if k_round < 1 or abs(k - k_round) > 1e-9:
        raise ValueError(f"u must be the reciprocal of a positive integer, got {u}")
    return int(k_round)


def covering_number_uniform(m: int, n: int, u: float) -> int:
    """Count of l-infinity grid cells of spacing n^(-1/u) needed to cover
    [0, 1]^m, namely ceil(n^(1/u))^m.  m = 0 covers a single point."""
    m = int(m)
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 1
    side = _grid_side(n, u)
    return side ** m


def _grid_side(n: int, u: float) -> int:
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if n < 1:
        raise ValueError("n must be >= 1")
    inv = 1.0 / u
    k = round(inv)
    if abs(inv - k) < 1e-9 and float(n).is_integer():
        return int(n) ** int(k)
    return math.ceil(n ** inv - 1e-9)


def log_covering_number_uniform(m: int, n: int, u: float) -> float:
    if int(m) == 0:
        return 0.0
    return int(m) * math.log(_grid_side(n, u))


def _uniform_cell_sum(h: float, u: float):
    """Exact cell-mass^u sum of the uniform density on [0, 1] over cells
    of width h, in closed form."""
    if h >= 1.0:
        return 1.0, 1
    q0 = int(math.floor(1.0 / h))
    q = q0
    for cand in (q0 + 1, q0):
        if cand * h <= 1.0 + 1e-12:
            q = cand
            break
    r = 1.0 - q * h
    if r < 1e-13 * h:
        r = 0.0
    total = q * h ** u + (r ** u if r > 0 else 0.0)
    return total, q + (1 if r > 0 else 0)


def _symmetric_cell_sum(within: WithinModelPrior, h: float, u: float,
                        max_cells: int) -> float:
    """Cell-mass^u sum of a symmetric log-odds density over the grid
    {[j*h, (j+1)*h): j integer}, truncated once a whole block of cells
    contributes less than a 1e-15 fraction of the running sum."""
    total = 0.0
    j0 = 0
    block = 4096
    while True:
        js = np.arange(j0, j0 + block, dtype=float)
        masses = within.tail(js * h) - within.tail((js + 1.0) * h)
        contr = float(np.sum(np.maximum(masses, 0.0) ** u))
        new_total = total + contr
        if j0 > 0 and contr <= _TAIL_TOL * new_total:
            total = new_total
            break
        total = new_total
        j0 += block
        block = min(block * 2, 1 << 20)
        if j0 >= max_cells // 2:
            raise QuadratureError(
                f"cell budget {max_cells} exhausted before the tail converged")
    return 2.0 * total


def norm_complexity_grid(within: WithinModelPrior, m: int, u: float, n: int,
                         max_cells: int = 2 ** 28) -> CoverSummary:
    """Prior-weighted complexity of one m-level model from exact grid
    cell sums, next to its closed-form analytic bound.

    The per-coordinate sum S adds cell-mass^u over cells of width
    h = 4 * n^(-1/u); products over coordinates give S^m and the
    complexity S^(m/u).  The analytic bound replaces S by
    (2*h*f(0)^u + integral of f^u) * h^(u-1), valid for any symmetric
    density f decreasing away from the origin.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    k = _unit_fraction(u)
    u = 1.0 / k
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    h = 4.0 * n ** (-1.0 / u)
    if within.kind == "uniform":
        per_coord, cells = _uniform_cell_sum(h, u)
        ball_count = float(cells) ** m
        f0 = 1.0
        u_integral = 1.0
        scale = "mean"
    else:
        per_coord = _symmetric_cell_sum(within, h, u, max_cells)
        ball_count = math.inf
        f0 = float(within.pdf(0.0))
        u_integral = within.u_norm_integral(u)
        scale = "log_odds"
    log_s = math.log(per_coord)
    analytic_per_coord = (2.0 * h * f0 ** u + u_integral) * h ** (u - 1.0)
    log_a = math.log(analytic_per_coord)

    def _safe_exp(x):
        try:
            return math.exp(x)
        except OverflowError:
            return math.inf

    return CoverSummary(
        radius=n ** (-1.0 / u),
        ball_count=ball_count,
        lu_norm_sum=_safe_exp(m * log_s),
        lu_norm=_safe_exp(m * log_s / u),
        log_lu_norm_sum=m * log_s,
        log_lu_norm=m * log_s / u,
        per_coordinate_sum=per_coord,
        grid_spacing=h,
        analytic_bound=_safe_exp(m * log_a / u),
        log_analytic_bound=m * log_a / u,
        scale=scale,
        scale_constant=SCALE_CONSTANTS[scale],
        m=m, u=u, n=n)


def log_norm_complexity_analytic(within: WithinModelPrior, m: int, u: float,
                                 n: int) -> float:
    """Log of the closed-form analytic complexity bound alone, without
    the grid cell sums.  O(1) regardless of n, so usable where the exact
    grid would need more cells than the budget allows."""
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    k = _unit_fraction(u)
    u = 1.0 / k
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    h = 4.0 * n ** (-1.0 / u)
    if within.kind == "uniform":
        f0, u_integral = 1.0, 1.0
    else:
        f0 = float(within.pdf(0.0))
        u_integral = within.u_norm_integral(u)
    log_a = math.log((2.0 * h * f0 ** u + u_integral) * h ** (u - 1.0))
    return m * log_a / u


def log_norm_complexity_mixture(log_masses: Sequence[float],
                                log_norms: Sequence[float], u: float) -> float:
    """Log of the mixture norm complexity [sum_m (pi_m * N_m)^u]^(1/u)."""
    log_masses = np.asarray(log_masses, dtype=float)
    log_norms = np.asarray(log_norms, dtype=float)
    if log_masses.shape != log_norms.shape or log_masses.ndim != 1 or log_masses.size == 0:
        raise ValueError("need matching nonempty 1-d mass and norm arrays")
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    return float(logsumexp(u * (log_masses + log_norms)) / u)


def norm_complexity_mixture(model_masses: Sequence[float],
                            per_model_norms: Sequence[float], u: float) -> float:
    masses = np.asarray(model_masses, dtype=float)
    norms = np.asarray(per_model_norms, dtype=float)
    if np.any(masses <= 0) or np.any(norms <= 0):
        raise ValueError("masses and norms must be positive")
    if abs(float(masses.sum()) - 1.0) > 1e-9:
        raise ValueError("model masses must sum to 1")
    return float(math.exp(log_norm_complexity_mixture(np.log(masses), np.log(norms), u)))


def parametric_norm_complexity_bound(d: int, u: float, n: int, c: float,
                                     prior_u_norm: float, t: float = 1.0,
                                     ) -> ParametricComplexity:
    """Closed-form norm-complexity bound |pi|_u * (c*d*n)^(d/u^2) of a
    d-parameter prior, with the complexity term it induces in the rate.
    """
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if c * d * n <= 1.0:
        raise ValueError("c * d * n must exceed 1")
    if prior_u_norm <= 0:
        raise ValueError("prior u-norm must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    log_bound = math.log(prior_u_norm) + (d / u ** 2) * math.log(c * d * n)
    term = (log_bound + 2.0 * (1.0 / u + 1.0 / t) * math.log(n)) / n
    try:
        bound = math.exp(log_bound)
    except OverflowError:
        bound = math.inf
    return ParametricComplexity(bound=bound, log_bound=log_bound, complexity_term=term)
