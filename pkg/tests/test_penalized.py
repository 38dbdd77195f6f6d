"""Boxed penalized-divergence bounds and their decomposition."""

import math

import numpy as np
import pytest

from ratelab import (
    PriorSpec,
    TrueModel,
    WithinModelPrior,
    box_prior_log_mass,
    default_delta_grid,
    default_m_grid,
    model_log_prior,
    penalized_divergence_upper,
    penalized_value_at,
    sup_divergence_over_box,
)

LINEAR = TrueModel.linear(intercept=0.3, slope=0.4)


class TestBoxSupremum:
    def test_chi_squared_closed_form(self):
        # (sup_error + delta)^2 / ((margin - delta)(1 - margin + delta))
        # with sup_error = 0.4/4 and the default margin 0.25
        val = sup_divergence_over_box(LINEAR, m=4, delta=0.05, t=1.0)
        assert val == pytest.approx(0.15 ** 2 / (0.2 * 0.8), abs=1e-15)
        assert val == pytest.approx(0.140625, abs=1e-15)

    def test_delta_must_stay_inside_margin(self):
        with pytest.raises(ValueError):
            sup_divergence_over_box(LINEAR, m=4, delta=0.25)
        with pytest.raises(ValueError):
            sup_divergence_over_box(LINEAR, m=4, delta=0.0)

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError):
            sup_divergence_over_box(LINEAR, m=4, delta=0.05, t=0.0)

    def test_general_order_attained_at_box_corner(self):
        # the per-bin integrand is convex in the level, so the numeric
        # scan must agree with the worse of the two box endpoints
        truth = TrueModel.sparse([0.4, 0.6])
        delta, t = 0.08, 2.0
        got = sup_divergence_over_box(truth, m=2, delta=delta, t=t)
        total = 0.0
        for level in (0.4, 0.6):
            corner = -math.inf
            for theta in (level - delta, level + delta):
                val = 0.5 * (level ** (1 + t) * theta ** -t
                             + (1 - level) ** (1 + t) * (1 - theta) ** -t - 1.0)
                corner = max(corner, val)
            total += corner
        assert got == pytest.approx(total / t, rel=1e-12)

    def test_monotone_in_delta(self):
        vals = [sup_divergence_over_box(LINEAR, 4, d) for d in (0.02, 0.08, 0.2)]
        assert vals[0] < vals[1] < vals[2]


class TestBoxPriorMass:
    def test_uniform_interior_box(self):
        spec = PriorSpec(n=64, k_model=2.0, m_max=6)
        delta, m = 0.1, 3
        got = box_prior_log_mass(spec, m, delta)
        expected = float(model_log_prior(spec)[m - 1]) + m * math.log(2 * delta)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_uniform_box_may_not_escape_support(self):
        spec = PriorSpec(n=64, m_max=4)
        with pytest.raises(ValueError):
            box_prior_log_mass(spec, 2, 0.2, centers=[0.1, 0.5])

    def test_log_odds_box_needs_centers(self):
        spec = PriorSpec(n=64, m_max=4,
                         within=WithinModelPrior.log_odds("normal", 1.0))
        with pytest.raises(ValueError):
            box_prior_log_mass(spec, 2, 0.1)
        val = box_prior_log_mass(spec, 2, 0.1, centers=[0.5, 0.5])
        assert val < 0.0

    def test_delta_must_be_positive(self):
        with pytest.raises(ValueError):
            box_prior_log_mass(PriorSpec(n=64, m_max=4), 2, 0.0)


class TestPenalizedValue:
    def test_decomposition_is_exact(self):
        spec = PriorSpec(n=500, k_model=3.0, m_max=20)
        res = penalized_value_at(LINEAR, spec, t=1.0, n=500, m=5, delta=0.03)
        assert res.value == pytest.approx(
            res.approx_term + res.box_term + res.model_term, abs=1e-15)
        assert res.box_term == pytest.approx(-5 * math.log(0.06) / 500, abs=1e-12)
        assert res.model_term == pytest.approx(
            -float(model_log_prior(spec)[4]) / 500, abs=1e-12)
        assert res.approx_term == pytest.approx(
            sup_divergence_over_box(LINEAR, 5, 0.03), abs=1e-15)

    def test_log_odds_delta_shrinks_on_mean_scale(self):
        spec = PriorSpec(n=500, m_max=20,
                         within=WithinModelPrior.log_odds("normal", 1.0))
        res = penalized_value_at(LINEAR, spec, t=1.0, n=500, m=5, delta=0.4)
        # the logistic map is 1/4-Lipschitz: log-odds half-width 0.4 maps
        # into a mean box of half-width at most 0.1
        assert res.approx_term == pytest.approx(
            sup_divergence_over_box(LINEAR, 5, 0.1), abs=1e-15)
        assert res.candidate.scale == "log_odds"

    def test_model_index_bounds(self):
        spec = PriorSpec(n=100, m_max=4)
        with pytest.raises(ValueError):
            penalized_value_at(LINEAR, spec, 1.0, 100, 5, 0.05)


class TestPenalizedUpper:
    def test_minimum_over_explicit_grid(self):
        spec = PriorSpec(n=200, m_max=10)
        m_grid, delta_grid = (1, 2, 4, 8), (0.01, 0.05, 0.1)
        best = penalized_divergence_upper(LINEAR, spec, 1.0, 200,
                                          m_grid=m_grid, delta_grid=delta_grid)
        values = [penalized_value_at(LINEAR, spec, 1.0, 200, m, d).value
                  for m in m_grid for d in delta_grid]
        assert best.value == pytest.approx(min(values), abs=1e-15)

    def test_tie_prefers_smaller_m(self):
        # a constant truth is fit exactly by every m, and larger m only
        # adds prior cost, so the minimizer must sit at m = 1
        truth = TrueModel.constant(0.5)
        spec = PriorSpec(n=300, m_max=12)
        best = penalized_divergence_upper(truth, spec, 1.0, 300)
        assert best.m == 1

    def test_infeasible_grids_raise(self):
        spec = PriorSpec(n=200, m_max=10)
        with pytest.raises(ValueError):
            penalized_divergence_upper(LINEAR, spec, 1.0, 200,
                                       delta_grid=(0.4, 0.9))

    def test_default_grids_cover_m0(self):
        truth = TrueModel.sparse([0.3, 0.7, 0.45])
        spec = PriorSpec(n=8, m_max=6)
        assert truth.m0 in default_m_grid(truth, spec, 8)
        deltas = default_delta_grid(truth, 8)
        assert all(0 < d < truth.margin for d in deltas)

    def test_oracle_inequality_against_per_model_values(self, rng):
        """The mixture bound equals the best per-model value plus its
        model-prior charge (the defining infimum is scanned jointly)."""
        for _ in range(20):
            n = int(rng.integers(50, 400))
            if rng.random() < 0.5:
                truth = TrueModel.sine(amplitude=float(rng.uniform(0.05, 0.2)))
            else:
                truth = TrueModel.sparse(rng.uniform(0.3, 0.7, size=3))
            spec = PriorSpec(n=n, k_model=float(rng.uniform(0.5, 3.0)),
                             m_max=int(rng.integers(4, 12)))
            mixture = penalized_divergence_upper(truth, spec, 1.0, n)
            m_grid = default_m_grid(truth, spec, n)
            delta_grid = default_delta_grid(truth, n)
            log_prior = model_log_prior(spec)
            per_model_best = math.inf
            for m in m_grid:
                for delta in delta_grid:
                    res = penalized_value_at(truth, spec, 1.0, n, m, delta)
                    charged = (res.approx_term + res.box_term
                               - float(log_prior[m - 1]) / n)
                    per_model_best = min(per_model_best, charged)
            assert mixture.value <= per_model_best + 1e-12
