"""
Test Cases for Function Spaces

Norms, the X^{α,λ} inner product, embedding-constant sampling and the
norm-equivalence bounds above the λ-threshold.
"""

import numpy as np
import pytest

from fracground.exceptions import GridMismatchError
from fracground.operators.fracops import FracOrder, Grid1D, GridFunction
from fracground.operators.spaces import (
    EmbeddingEstimate,
    check_interval_inequalities,
    check_norm_equivalence,
    estimate_c_inf,
    h_alpha_norm,
    l2_norm,
    lp_norm,
    norm_report,
    sample_bump_ratios,
    weight_integral,
    x_alpha_lambda_inner,
    x_alpha_lambda_norm,
)


@pytest.fixture
def wide_grid():
    return Grid1D(a=-8.0, b=8.0, n_nodes=2048)


@pytest.fixture
def line_grid():
    # h = 1/64, so t = 0 and t = 1 are nodes
    return Grid1D(a=-4.0, b=4.0, n_nodes=513)


@pytest.fixture
def bump(line_grid):
    t = line_grid.nodes
    values = np.where((t >= 0.0) & (t <= 1.0), np.sin(np.pi * t) ** 2, 0.0)
    return GridFunction(grid=line_grid, values=values)


class TestNorms:
    def test_gaussian_l2(self, wide_grid):
        u = GridFunction.from_callable(wide_grid, lambda t: np.exp(-t ** 2))
        assert l2_norm(u) == pytest.approx((np.pi / 2.0) ** 0.25, rel=1e-8)

    def test_lp_norms(self, wide_grid):
        u = GridFunction.from_callable(wide_grid, lambda t: np.exp(-t ** 2))
        assert lp_norm(u, np.inf) == pytest.approx(1.0, abs=1e-4)
        assert lp_norm(u, 2.0) == pytest.approx(l2_norm(u), rel=1e-12)
        # ∫ exp(-4t²) = (π/4)^{1/2}
        assert lp_norm(u, 4.0) == pytest.approx((np.pi / 4.0) ** 0.125, rel=1e-8)

    def test_vector_magnitude(self, wide_grid):
        t = wide_grid.nodes
        u = GridFunction(grid=wide_grid, values=np.column_stack([0.6 * np.exp(-t ** 2), 0.8 * np.exp(-t ** 2)]))
        scalar = GridFunction(grid=wide_grid, values=np.exp(-t ** 2))
        assert l2_norm(u) == pytest.approx(l2_norm(scalar), rel=1e-12)

    def test_h_alpha_combines_parts(self, wide_grid):
        u = GridFunction.from_callable(wide_grid, lambda t: np.exp(-t ** 2))
        order = FracOrder(alpha=0.75)
        assert h_alpha_norm(u, order) > l2_norm(u)

    def test_norm_report(self, bump, order, weight):
        report = norm_report(bump, order, lam=10.0, weight=weight)
        assert report.linf == pytest.approx(1.0, abs=1e-3)
        assert report.interpolation_holds
        assert report.x_alpha_lambda is not None and report.x_alpha_lambda > 0.0
        assert norm_report(bump, order).x_alpha_lambda is None


class TestWeightedSpace:
    def test_symmetric_bilinear(self, line_grid, order, weight):
        rng = np.random.default_rng(0)
        t = line_grid.nodes
        envelope = np.exp(-t ** 2)
        u = GridFunction(grid=line_grid, values=envelope * rng.standard_normal(t.size))
        v = GridFunction(grid=line_grid, values=envelope * rng.standard_normal(t.size))
        uv = x_alpha_lambda_inner(u, v, 50.0, weight, order)
        vu = x_alpha_lambda_inner(v, u, 50.0, weight, order)
        assert uv == pytest.approx(vu, rel=1e-10)
        doubled = x_alpha_lambda_inner(u.with_values(2.0 * u.values), v, 50.0, weight, order)
        assert doubled == pytest.approx(2.0 * uv, rel=1e-10)

    def test_lambda_independent_inside_t(self, bump, order, weight):
        values = [x_alpha_lambda_norm(bump, lam, weight, order) for lam in (1.0, 100.0, 1e4)]
        assert weight_integral(bump, bump, weight) == 0.0
        assert values[0] == values[1] == values[2]

    def test_weight_term_grows_with_lambda(self, line_grid, order, weight):
        u = GridFunction.from_callable(line_grid, lambda t: np.exp(-(t - 0.5) ** 2))
        assert weight_integral(u, u, weight) > 0.0
        assert x_alpha_lambda_norm(u, 1e3, weight, order) > x_alpha_lambda_norm(u, 10.0, weight, order)

    def test_rejects_bad_arguments(self, bump, order, weight, line_grid):
        with pytest.raises(ValueError):
            x_alpha_lambda_inner(bump, bump, 0.0, weight, order)
        other = GridFunction.zeros(Grid1D(a=-4.0, b=4.0, n_nodes=257))
        with pytest.raises(GridMismatchError):
            x_alpha_lambda_inner(bump, other, 1.0, weight, order)
        pair = GridFunction.zeros(line_grid, n_components=2)
        with pytest.raises(GridMismatchError):
            x_alpha_lambda_inner(pair, pair, 1.0, weight, order)


class TestEmbedding:
    def test_sampling_is_sequential(self, order):
        short = sample_bump_ratios(order, 4, rng_seed=7)
        long = sample_bump_ratios(order, 8, rng_seed=7)
        np.testing.assert_array_equal(short, long[:4])
        assert np.all(short > 0.0)

    def test_estimate_is_deterministic(self, order):
        first = estimate_c_inf(order, 8, 0)
        second = estimate_c_inf(FracOrder(alpha=0.75), 8, 0)
        assert first.c_inf_lower == second.c_inf_lower
        assert first.sample_count == 8
        assert first.lambda_threshold is None

    def test_more_samples_never_lower(self, order):
        assert estimate_c_inf(order, 16, 0).c_inf_lower >= estimate_c_inf(order, 8, 0).c_inf_lower

    def test_lower_order_gives_larger_constant(self):
        rough, smooth = FracOrder(alpha=0.6), FracOrder(alpha=0.9)
        assert estimate_c_inf(rough, 64, 0).c_inf_lower > estimate_c_inf(smooth, 64, 0).c_inf_lower
        # same bumps, widths below 0.8
        assert np.all(sample_bump_ratios(rough, 16, 3) >= sample_bump_ratios(smooth, 16, 3))

    def test_sampled_value_is_below_sharp_constant(self, order):
        # sharp C_∞ ≈ 0.877 at α = 0.75
        assert 0.67 < estimate_c_inf(order, 64, 0).c_inf_lower < 0.877

    def test_complete(self):
        est = EmbeddingEstimate(c_inf_lower=0.5, sample_count=1).complete(meas_sublevel=2.0, c=4.0)
        assert est.sublevel_product == pytest.approx(0.5)
        assert est.theta_const == pytest.approx(1.0)
        assert est.lambda_threshold == pytest.approx(0.5)
        assert est.admissible

    def test_inadmissible(self):
        est = EmbeddingEstimate(c_inf_lower=1.0, sample_count=1).complete(meas_sublevel=2.0, c=1.0)
        assert est.theta_const is None
        assert not est.admissible


class TestNormEquivalence:
    @pytest.fixture
    def estimate(self, weight):
        return EmbeddingEstimate(c_inf_lower=0.683, sample_count=1).complete(weight.sublevel_measure_exact, weight.c)

    def test_not_applicable_below_threshold(self, bump, weight, estimate, order):
        report = check_norm_equivalence(bump, estimate.lambda_threshold / 2.0, weight, estimate, order)
        assert not report.applicable
        assert report.reason.startswith("not applicable")
        assert not report.all_hold

    def test_not_applicable_without_theta(self, bump, weight, order):
        bad = EmbeddingEstimate(c_inf_lower=2.0, sample_count=1).complete(weight.sublevel_measure_exact, weight.c)
        assert not check_norm_equivalence(bump, 100.0, weight, bad, order).applicable

    def test_bounds_hold_above_threshold(self, bump, weight, estimate, order):
        report = check_norm_equivalence(bump, 100.0, weight, estimate, order)
        assert report.applicable
        assert report.checks['l2']
        assert report.checks['h_alpha']
        assert report.checks['l4']
        assert set(report.checks) == {'l2', 'h_alpha', 'l4', 'linf'}


class TestIntervalInequalities:
    def test_bump_on_unit_interval(self, order):
        grid = Grid1D(a=0.0, b=1.0, n_nodes=513)
        u = GridFunction.from_callable(grid, lambda t: np.sin(np.pi * t) ** 2)
        report = check_interval_inequalities(u, order)
        assert set(report.checks) == {'poincare_l2', 'sup'}
        assert report.all_hold

    def test_sup_check_needs_alpha_above_half(self):
        grid = Grid1D(a=0.0, b=1.0, n_nodes=257)
        u = GridFunction.from_callable(grid, lambda t: np.sin(np.pi * t) ** 2)
        assert set(check_interval_inequalities(u, FracOrder(alpha=0.4)).checks) == {'poincare_l2'}
