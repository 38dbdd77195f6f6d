"""Rate studies: simulate, fit posteriors, measure divergences, bound them.

A study walks the configured n grid.  For each n it computes the
theoretical epsilon_n once per bound variant, then for each replicate
simulates a dataset, builds the exact posterior, and takes divergence
draws.  Every random quantity comes from a counter stream keyed by
(seed, purpose tag, n, replicate), so results are independent of
execution order and identical with or without a worker pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .complexity import (log_covering_number_uniform,
                         log_norm_complexity_analytic,
                         log_norm_complexity_mixture, norm_complexity_grid)
from .config import ExperimentConfig
from .models import model_log_prior, simulate_data
from .penalized import penalized_divergence_upper
from .posterior import empirical_divergence_quantiles, model_posterior
from .rate_bounds import rate_bound
from .rng import stream

__all__ = [
    "TAG_DATA",
    "TAG_DRAW",
    "VariantBounds",
    "StudyRow",
    "SlopeFit",
    "StudySummary",
    "StudyResult",
    "CSV_SCHEMA_HEADER",
    "CSV_COLUMNS",
    "variant_bounds_for_n",
    "fit_slope",
    "run_rate_study",
    "format_study_csv",
    "write_study_csv",
]

# purpose tags keep data and posterior-draw streams disjoint per (n, replicate)
TAG_DATA = 1
TAG_DRAW = 2

CSV_SCHEMA_HEADER = "# ratelab rate-study schema v1"
CSV_COLUMNS = ("n", "replicate", "variant", "d2_min", "d2_median", "d2_q95",
               "d2_max", "penalized_div", "complexity_term", "epsilon_n",
               "exceedance")


@dataclass(frozen=True)
class VariantBounds:
    """Theoretical bound pieces for one (variant, n)."""

    variant: str
    n: int
    penalized_div: float
    complexity_term: float
    epsilon_n: float
    log_richness: float


@dataclass(frozen=True)
class StudyRow:
    """One (n, replicate, variant) record of empirical and bound values."""

    n: int
    replicate: int
    variant: str
    d2_min: float
    d2_median: float
    d2_q95: float
    d2_max: float
    penalized_div: float
    complexity_term: float
    epsilon_n: float
    exceedance: float

    def __post_init__(self):
        gap = abs(self.epsilon_n - (self.penalized_div + self.complexity_term))
        if gap > 1e-12 * max(1.0, abs(self.epsilon_n)):
            raise ValueError("epsilon_n must equal penalized_div + complexity_term")
        if not 0.0 <= self.exceedance <= 1.0:
            raise ValueError("exceedance must lie in [0, 1]")


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class StudySummary:
    """Pooled per-n medians, the fitted log-log rate, and worst-case
    exceedance per variant over the post-burn-in grid."""

    n_grid: tuple
    pooled_medians: tuple
    fit: SlopeFit
    max_exceedance: tuple
    burn_in_n: int

    def exceedance_for(self, variant: str) -> float:
        for name, value in self.max_exceedance:
            if name == variant:
                return value
        raise KeyError(variant)


@dataclass(frozen=True)
class StudyResult:
    rows: tuple
    summary: StudySummary
    config: ExperimentConfig


def variant_bounds_for_n(config: ExperimentConfig, n: int) -> tuple:
    """epsilon_n breakdowns for every configured variant at one n.

    Covering counts use the per-model uniform grid; norm complexities
    use exact grid sums for the uniform within prior and the analytic
    envelope for unbounded log-odds priors (a valid upper bound that
    stays cheap at large n).
    """
    spec = config.prior_for(n)
    truth, u, t = config.truth, config.u, config.t
    pen = penalized_divergence_upper(truth, spec, t, n).value
    log_masses = model_log_prior(spec)
    sizes = range(1, spec.m_max + 1)

    log_covers = None
    if "prop3" in config.variants or "prop7" in config.variants:
        log_covers = np.array([log_covering_number_uniform(m, n, u) for m in sizes])
    log_norm = None
    if "remark8" in config.variants or "remark10" in config.variants:
        if spec.within.kind == "uniform":
            log_norms = [norm_complexity_grid(spec.within, m, u, n).log_lu_norm
                         for m in sizes]
        else:
            log_norms = [log_norm_complexity_analytic(spec.within, m, u, n)
                         for m in sizes]
        log_norm = log_norm_complexity_mixture(log_masses, log_norms, u)

    out = []
    for variant in config.variants:
        if variant == "prop3":
            breakdown = rate_bound(variant, u, t, n, pen,
                                   log_cover_count=float(logsumexp(log_covers)))
        elif variant == "prop7":
            breakdown = rate_bound(variant, u, t, n, pen,
                                   model_log_masses=log_masses,
                                   model_log_covers=log_covers)
        else:
            breakdown = rate_bound(variant, u, t, n, pen,
                                   log_norm_complexity=log_norm)
        out.append(VariantBounds(
            variant=variant, n=n, penalized_div=breakdown.penalized_div,
            complexity_term=breakdown.complexity_term,
            epsilon_n=breakdown.epsilon_n,
            log_richness=breakdown.log_richness))
    return tuple(out)


def fit_slope(points: Sequence) -> SlopeFit:
    """Ordinary least squares fit of y on x for (x, y) pairs."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    x, y = pts[:, 0], pts[:, 1]
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-30:
        raise ValueError("degenerate abscissae: x values carry no spread")
    sxy = float(np.sum((x - xm) * (y - ym)))
    slope = sxy / sxx
    intercept = float(ym - slope * xm)
    residual = y - (slope * x + intercept)
    ss_res = float(np.sum(residual ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return SlopeFit(slope=slope, intercept=intercept, r_squared=r2)


def _run_cell(config: ExperimentConfig, n: int, replicate: int,
              bounds: tuple):
    data = simulate_data(config.truth, n,
                         seed=(config.seed, TAG_DATA, n, replicate))
    state = model_posterior(data, config.prior_for(n))
    rng = stream(config.seed, TAG_DRAW, n, replicate)
    summary = empirical_divergence_quantiles(
        config.truth, state, config.u, config.draws, rng)
    rows = []
    for vb in bounds:
        exceed = float(np.mean(summary.values > vb.epsilon_n))
        rows.append(StudyRow(
            n=n, replicate=replicate, variant=vb.variant,
            d2_min=summary.min, d2_median=summary.median,
            d2_q95=summary.q95, d2_max=summary.max,
            penalized_div=vb.penalized_div,
            complexity_term=vb.complexity_term,
            epsilon_n=vb.epsilon_n,
            exceedance=exceed))
    return summary.values, rows


def run_rate_study(config: ExperimentConfig) -> StudyResult:
    bounds_by_n = {n: variant_bounds_for_n(config, n) for n in config.n_grid}
    cells = [(n, r) for n in config.n_grid for r in range(config.replicates)]

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {cell: pool.submit(_run_cell, config, cell[0], cell[1],
                                         bounds_by_n[cell[0]])
                       for cell in cells}
            results = {cell: futures[cell].result() for cell in cells}
    else:
        results = {cell: _run_cell(config, cell[0], cell[1], bounds_by_n[cell[0]])
                   for cell in cells}

    rows = []
    pooled = []
    for n in config.n_grid:
        values = np.concatenate([results[(n, r)][0]
                                 for r in range(config.replicates)])
        pooled.append(float(np.median(values)))
        for r in range(config.replicates):
            rows.extend(results[(n, r)][1])

    fit = fit_slope([(math.log(n), math.log(max(med, 1e-300)))
                     for n, med in zip(config.n_grid, pooled)]
                    ) if len(config.n_grid) >= 3 else SlopeFit(
                        slope=math.nan, intercept=math.nan, r_squared=math.nan)

    burn_n = config.n_grid[config.burn_in]
    max_exceed = []
    for variant in config.variants:
        worst = max((row.exceedance for row in rows
                     if row.variant == variant and row.n >= burn_n),
                    default=0.0)
        max_exceed.append((variant, worst))

    summary = StudySummary(
        n_grid=config.n_grid,
        pooled_medians=tuple(pooled),
        fit=fit,
        max_exceedance=tuple(max_exceed),
        burn_in_n=burn_n)
    return StudyResult(rows=tuple(rows), summary=summary, config=config)


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def format_study_csv(result: StudyResult) -> str:
    lines = [CSV_SCHEMA_HEADER, ",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_format_value(getattr(row, col))
                              for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_study_csv(result: StudyResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(format_study_csv(result))
