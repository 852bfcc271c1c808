"""
Test Cases for Fractional Operators

Grünwald-Letnikov weights, one-sided derivatives, the stiffness form and the
Fourier semi-norm oracle.
"""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import binom

from fracground.exceptions import GridMismatchError, PeriodificationError
from fracground.operators.fracops import (
    FracOpMatrix,
    FracOrder,
    Grid1D,
    GridFunction,
    Side,
    convergence_study,
    fourier_seminorm,
    gl_weights,
    left_frac_derivative,
    right_frac_derivative,
    stiffness_form,
)


def inverse_gamma_1_5():
    return math.exp(-math.lgamma(1.5))


class TestGridTypes:
    def test_nodes_and_spacing(self):
        grid = Grid1D(a=-1.0, b=1.0, n_nodes=5)
        assert grid.h == pytest.approx(0.5)
        np.testing.assert_allclose(grid.nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])
        np.testing.assert_allclose(grid.quadrature_weights(), [0.25, 0.5, 0.5, 0.5, 0.25])

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            Grid1D(a=1.0, b=0.0, n_nodes=5)
        with pytest.raises(ValueError):
            Grid1D(a=0.0, b=1.0, n_nodes=2)

    def test_grid_function_shape(self):
        grid = Grid1D(a=0.0, b=1.0, n_nodes=11)
        u = GridFunction(grid=grid, values=np.ones(11))
        assert u.values.shape == (11, 1)
        assert u.n_components == 1
        with pytest.raises(ValueError):
            GridFunction(grid=grid, values=np.ones(10))
        with pytest.raises(ValueError):
            GridFunction(grid=grid, values=np.full(11, np.nan))


class TestGLWeights:
    def test_first_difference_limit(self):
        np.testing.assert_allclose(gl_weights(FracOrder(alpha=1.0), 3), [1.0, -1.0, 0.0, 0.0])

    def test_first_entry(self):
        for alpha in (0.1, 0.5, 0.9):
            assert gl_weights(FracOrder(alpha=alpha), 1)[0] == 1.0

    def test_binomial_oracle(self):
        weights = gl_weights(FracOrder(alpha=0.5), 3)
        np.testing.assert_allclose(weights, [1.0, -0.5, -0.125, -0.0625])
        k = np.arange(4)
        np.testing.assert_allclose(weights, (-1.0) ** k * binom(0.5, k), rtol=1e-14)

    @pytest.mark.parametrize("alpha", [0.3, 0.75, 0.95])
    def test_partial_sums(self, alpha):
        sums = np.cumsum(gl_weights(FracOrder(alpha=alpha), 2000))
        assert np.all(sums >= 0.0)
        assert np.all(sums <= 1.0)
        assert np.all(np.diff(sums) <= 0.0)
        assert sums[-1] < 0.2

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            gl_weights(FracOrder(alpha=0.5), 0)


class TestDerivatives:
    @pytest.fixture
    def unit_grid(self):
        return Grid1D(a=0.0, b=1.0, n_nodes=1025)

    def test_zero_function(self, unit_grid):
        zero = GridFunction.zeros(unit_grid)
        order = FracOrder(alpha=0.6)
        assert np.all(left_frac_derivative(zero, order).values == 0.0)
        assert np.all(right_frac_derivative(zero, order).values == 0.0)

    def test_linear_power_rule(self, unit_grid):
        u = GridFunction.from_callable(unit_grid, lambda t: t)
        d = left_frac_derivative(u, FracOrder(alpha=0.5))
        assert abs(d.values[-1, 0] - inverse_gamma_1_5()) < 5e-3

    def test_right_linear_power_rule(self, unit_grid):
        u = GridFunction.from_callable(unit_grid, lambda t: 1.0 - t)
        d = right_frac_derivative(u, FracOrder(alpha=0.5))
        assert abs(d.values[0, 0] - inverse_gamma_1_5()) < 5e-3

    def test_quadratic_interior_accuracy(self, unit_grid):
        order = FracOrder(alpha=0.7)
        t = unit_grid.nodes
        u = GridFunction(grid=unit_grid, values=t ** 2)
        approx = left_frac_derivative(u, order).values[:, 0]
        exact = math.exp(math.lgamma(3.0) - math.lgamma(3.0 - 0.7)) * t ** 1.3
        window = t >= 0.1
        assert np.max(np.abs(approx[window] - exact[window]) / exact[window]) < 2e-2

    def test_first_order_convergence(self):
        table = convergence_study(FracOrder(alpha=0.7), exponent=2.0, node_counts=(513, 1025, 2049))
        ratios = table['ratio'].dropna()
        assert len(ratios) == 2
        assert np.all((ratios >= 1.7) & (ratios <= 2.3))

    def test_reflection_symmetry(self):
        grid = Grid1D(a=0.0, b=2.0, n_nodes=301)
        rng = np.random.default_rng(4)
        values = rng.standard_normal((301, 2))
        values[-1] = 0.0
        order = FracOrder(alpha=0.65)
        right = right_frac_derivative(GridFunction(grid=grid, values=values), order).values
        reflected = GridFunction(grid=grid, values=values[::-1])
        left = left_frac_derivative(reflected, order).values[::-1]
        np.testing.assert_allclose(right, left, atol=1e-10 * np.max(np.abs(left)))

    def test_linearity(self, unit_grid):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((2, unit_grid.n_nodes))
        a[0] = b[0] = 0.0
        order = FracOrder(alpha=0.8)
        lhs = left_frac_derivative(GridFunction(grid=unit_grid, values=2.0 * a - 3.0 * b), order).values
        rhs = (2.0 * left_frac_derivative(GridFunction(grid=unit_grid, values=a), order).values
               - 3.0 * left_frac_derivative(GridFunction(grid=unit_grid, values=b), order).values)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * np.max(np.abs(rhs)))

    def test_grid_mismatch(self, unit_grid):
        other = Grid1D(a=0.0, b=1.0, n_nodes=513)
        order = FracOrder(alpha=0.5)
        op = FracOpMatrix.build(order, other)
        with pytest.raises(GridMismatchError):
            left_frac_derivative(GridFunction.zeros(unit_grid), order, operator=op)


class TestAdjointness:
    def test_transpose_pairs(self):
        grid = Grid1D(a=-1.0, b=1.0, n_nodes=257)
        order = FracOrder(alpha=0.75)
        left = FracOpMatrix.build(order, grid, Side.LEFT)
        right = left.transpose()
        np.testing.assert_array_equal(right.dense(), left.dense().T)

        rng = np.random.default_rng(1)
        support = np.abs(grid.nodes) < 0.7
        for _ in range(100):
            u = rng.standard_normal(grid.n_nodes) * support
            v = rng.standard_normal(grid.n_nodes) * support
            lhs = grid.h * np.dot(left.apply(u), v)
            rhs = grid.h * np.dot(u, right.apply(v))
            assert abs(lhs - rhs) <= 1e-8 * np.linalg.norm(u) * np.linalg.norm(v)

    def test_fft_and_dense_products_agree(self):
        grid = Grid1D(a=0.0, b=1.0, n_nodes=200)
        op = FracOpMatrix.build(FracOrder(alpha=0.4), grid)
        x = np.random.default_rng(2).standard_normal((200, 3))
        np.testing.assert_allclose(op.apply(x), op.dense() @ x, rtol=1e-10, atol=1e-10 * np.abs(x).max())


class TestStiffnessForm:
    @pytest.fixture
    def form(self):
        return stiffness_form(FracOrder(alpha=0.75), Grid1D(a=-2.0, b=2.0, n_nodes=160))

    def test_symmetric_psd(self, form):
        dense = form.dense()
        np.testing.assert_allclose(dense, dense.T, rtol=0, atol=1e-12 * np.abs(dense).max())
        rng = np.random.default_rng(3)
        for _ in range(100):
            u = rng.standard_normal(dense.shape[0])
            assert u @ dense @ u >= 0.0
        assert np.min(np.linalg.eigvalsh(dense)) > -1e-10 * np.abs(dense).max()

    def test_routes_agree(self, form):
        x = np.random.default_rng(5).standard_normal(form.grid.n_nodes)
        np.testing.assert_allclose(form.apply(x), form.apply_direct(x), rtol=1e-9,
                                   atol=1e-10 * np.abs(form.apply_direct(x)).max())
        assert form.value(x) == pytest.approx(x @ form.dense() @ x, rel=1e-10)

    def test_block_is_principal_submatrix(self, form):
        np.testing.assert_allclose(form.block(40, 90), form.dense()[40:90, 40:90], rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
    def test_matches_fourier_side(self, alpha):
        order = FracOrder(alpha=alpha)
        grid = Grid1D(a=-8.0, b=8.0, n_nodes=2048)
        u = GridFunction.from_callable(grid, lambda t: np.exp(-t ** 2))
        quadratic = stiffness_form(order, grid).value(u.values)
        spectral = fourier_seminorm(u, order) ** 2
        assert quadratic == pytest.approx(spectral, rel=2e-2)


class TestFourierSeminorm:
    @pytest.fixture
    def grid(self):
        return Grid1D(a=-8.0, b=8.0, n_nodes=2048)

    def test_zero(self, grid):
        assert fourier_seminorm(GridFunction.zeros(grid), FracOrder(alpha=0.75)) == 0.0

    def test_gaussian_against_quadrature(self, grid):
        alpha = 0.75
        u = GridFunction.from_callable(grid, lambda t: np.exp(-t ** 2))
        # |û(ω)|² = π·exp(-ω²/2) for exp(-t²)
        integral, _ = integrate.quad(lambda w: w ** (2 * alpha) * np.pi * np.exp(-w ** 2 / 2), 0.0, np.inf)
        expected = np.sqrt(2.0 * integral / (2.0 * np.pi))
        assert fourier_seminorm(u, FracOrder(alpha=alpha)) == pytest.approx(expected, rel=1e-2)

    def test_first_order_limit(self, grid):
        t = grid.nodes
        values = np.exp(-2.0 * t ** 2)
        u = GridFunction(grid=grid, values=values)
        derivative = np.gradient(values, grid.h)
        classical = np.sqrt(np.sum(grid.quadrature_weights() * derivative ** 2))
        assert fourier_seminorm(u, FracOrder(alpha=1.0)) == pytest.approx(classical, rel=1e-2)

    def test_components_add(self, grid):
        t = grid.nodes
        pair = GridFunction(grid=grid, values=np.column_stack([np.exp(-t ** 2), np.exp(-(t - 1) ** 2)]))
        first = GridFunction(grid=grid, values=np.exp(-t ** 2))
        second = GridFunction(grid=grid, values=np.exp(-(t - 1) ** 2))
        order = FracOrder(alpha=0.6)
        assert fourier_seminorm(pair, order) ** 2 == pytest.approx(
            fourier_seminorm(first, order) ** 2 + fourier_seminorm(second, order) ** 2, rel=1e-12)

    def test_non_decaying_input(self, grid):
        u = GridFunction(grid=grid, values=np.ones(grid.n_nodes))
        with pytest.raises(PeriodificationError):
            fourier_seminorm(u, FracOrder(alpha=0.5))
