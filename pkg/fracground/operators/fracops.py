"""
Fractional Operators

Grünwald-Letnikov discretisations of one-sided fractional derivatives on
uniform grids, including:
- Grid and grid-function records
- Left and right fractional derivative matrices (lower/upper Toeplitz)
- The discrete Dirichlet form A = h·D_Lᵀ D_L
- A Fourier-multiplier oracle for the H^α semi-norm
"""

import logging
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import fft as sp_fft
from scipy.linalg import matmul_toeplitz, toeplitz
from scipy.special import gamma

from ..config.settings import defaults
from ..exceptions import GridMismatchError, PeriodificationError

logger = logging.getLogger(__name__)


class Side(str, Enum):
    """Side of a one-sided fractional derivative"""
    LEFT = "left"
    RIGHT = "right"


class FracOrder(BaseModel):
    """Order of differentiation"""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0.0, le=1.0, description="Fractional order α")


class Grid1D(BaseModel):
    """Uniform mesh t_i = a + i·h on [a, b]"""
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., description="Left endpoint")
    b: float = Field(..., description="Right endpoint")
    n_nodes: int = Field(..., ge=3, description="Number of nodes including both endpoints")

    @model_validator(mode="after")
    def _check_interval(self) -> "Grid1D":
        if not self.a < self.b:
            raise ValueError(f"grid requires a < b, got a={self.a}, b={self.b}")
        return self

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n_nodes)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal weights"""
        q = np.full(self.n_nodes, self.h)
        q[0] = q[-1] = 0.5 * self.h
        return q


class GridFunction(BaseModel):
    """Vector-valued nodal samples; values has shape (n_nodes, n_components)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid1D
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_matrix(cls, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"values must be 1-D or 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        return arr

    @model_validator(mode="after")
    def _check_shape(self) -> "GridFunction":
        if self.values.shape[0] != self.grid.n_nodes:
            raise GridMismatchError(
                f"{self.values.shape[0]} rows of values for a grid of {self.grid.n_nodes} nodes"
            )
        return self

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean norm |u(t_i)|"""
        return np.linalg.norm(self.values, axis=1)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(grid=self.grid, values=values)

    @classmethod
    def from_callable(cls, grid: Grid1D, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid=grid, values=func(grid.nodes))

    @classmethod
    def zeros(cls, grid: Grid1D, n_components: int = 1) -> "GridFunction":
        return cls(grid=grid, values=np.zeros((grid.n_nodes, n_components)))


def gl_weights(order: FracOrder, count: int) -> np.ndarray:
    """
    Grünwald-Letnikov coefficients w_0..w_count

    Args:
        order: Fractional order
        count: Index of the last coefficient

    Returns:
        Array of length count + 1 with w_k = (-1)^k binom(α, k)
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    k = np.arange(1, count + 1, dtype=float)
    return np.concatenate(([1.0], np.cumprod(1.0 - (order.alpha + 1.0) / k)))


class FracOpMatrix(BaseModel):
    """Toeplitz representation of a one-sided Grünwald-Letnikov derivative"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    order: FracOrder
    grid: Grid1D
    side: Side
    weights: np.ndarray = Field(..., description="GL coefficients scaled by h^-α")

    @classmethod
    def build(cls, order: FracOrder, grid: Grid1D, side: Side = Side.LEFT) -> "FracOpMatrix":
        weights = gl_weights(order, grid.n_nodes - 1) * grid.h ** (-order.alpha)
        return cls(order=order, grid=grid, side=side, weights=weights)

    def _column_row(self) -> Tuple[np.ndarray, np.ndarray]:
        corner = np.zeros_like(self.weights)
        corner[0] = self.weights[0]
        if self.side is Side.LEFT:
            return self.weights, corner
        return corner, self.weights

    def transpose(self) -> "FracOpMatrix":
        flipped = Side.RIGHT if self.side is Side.LEFT else Side.LEFT
        return FracOpMatrix(order=self.order, grid=self.grid, side=flipped, weights=self.weights)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """FFT-accelerated product with a (n_nodes,) or (n_nodes, k) array"""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.grid.n_nodes:
            raise GridMismatchError(
                f"operator on {self.grid.n_nodes} nodes applied to {values.shape[0]} rows"
            )
        flat = values.ndim == 1
        block = values[:, None] if flat else values
        product = np.asarray(matmul_toeplitz(self._column_row(), block, check_finite=False))
        product = product.reshape(block.shape)
        return product[:, 0] if flat else product

    def dense(self) -> np.ndarray:
        column, row = self._column_row()
        return toeplitz(column, row)

    def column_block(self, start: int, stop: int) -> np.ndarray:
        """
        Rows start..n_nodes-1 of the left-sided matrix restricted to columns
        start..stop-1; rows above start vanish on these columns.
        """
        if self.side is not Side.LEFT:
            raise ValueError("column blocks are defined for the left-sided operator")
        width = stop - start
        row = np.zeros(width)
        row[0] = self.weights[0]
        return toeplitz(self.weights[: self.grid.n_nodes - start], row)


def _checked_operator(u: GridFunction, order: FracOrder, side: Side,
                      operator: Optional[FracOpMatrix]) -> FracOpMatrix:
    if operator is None:
        return FracOpMatrix.build(order, u.grid, side)
    if operator.grid != u.grid or operator.order != order:
        raise GridMismatchError("operator grid/order does not match the grid function")
    return operator if operator.side is side else operator.transpose()


def left_frac_derivative(u: GridFunction, order: FracOrder,
                         operator: Optional[FracOpMatrix] = None) -> GridFunction:
    """
    Left-sided derivative (D_L u)_i = h^-α Σ_{k≤i} w_k u_{i-k}

    Args:
        u: Grid function vanishing at the left end
        order: Fractional order
        operator: Prebuilt operator on the same grid (optional)

    Returns:
        Grid function of left derivatives
    """
    op = _checked_operator(u, order, Side.LEFT, operator)
    if np.any(u.values[0] != 0.0):
        logger.warning("left derivative of a function not vanishing at t=%g", u.grid.a)
    return u.with_values(op.apply(u.values))


def right_frac_derivative(u: GridFunction, order: FracOrder,
                          operator: Optional[FracOpMatrix] = None) -> GridFunction:
    """
    Right-sided derivative (D_R u)_i = h^-α Σ_{k≤N-1-i} w_k u_{i+k}

    Args:
        u: Grid function vanishing at the right end
        order: Fractional order
        operator: Prebuilt operator on the same grid (optional)

    Returns:
        Grid function of right derivatives
    """
    op = _checked_operator(u, order, Side.RIGHT, operator)
    if np.any(u.values[-1] != 0.0):
        logger.warning("right derivative of a function not vanishing at t=%g", u.grid.b)
    return u.with_values(op.apply(u.values))


class StiffnessForm:
    """Discrete Dirichlet form A = h·D_Lᵀ D_L, uᵀAu ≈ ∫|D^α u|² dt"""

    def __init__(self, order: FracOrder, grid: Grid1D):
        self.order = order
        self.grid = grid
        self.derivative = FracOpMatrix.build(order, grid, Side.LEFT)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """O(N log N) action through two Toeplitz products"""
        left = self.derivative.apply(values)
        return self.grid.h * self.derivative.transpose().apply(left)

    def apply_direct(self, values: np.ndarray) -> np.ndarray:
        return self.dense() @ np.asarray(values, dtype=float)

    def dense(self) -> np.ndarray:
        matrix = self.derivative.dense()
        return self.grid.h * matrix.T @ matrix

    def block(self, start: int, stop: int) -> np.ndarray:
        """A restricted to the contiguous index range [start, stop)"""
        columns = self.derivative.column_block(start, stop)
        return self.grid.h * columns.T @ columns

    def value(self, values: np.ndarray) -> float:
        left = self.derivative.apply(values)
        return float(self.grid.h * np.sum(left * left))


def stiffness_form(order: FracOrder, grid: Grid1D) -> StiffnessForm:
    return StiffnessForm(order, grid)


def fourier_seminorm(u: GridFunction, order: FracOrder,
                     tolerance: Optional[float] = None) -> float:
    """
    Spectral H^α semi-norm (Σ|ω_k|^{2α}|û_k|² Δω/2π)^{1/2}

    Args:
        u: Grid function decaying at both grid ends
        order: Fractional order
        tolerance: Admissible end magnitude relative to max |u|

    Returns:
        Semi-norm value
    """
    tolerance = defaults.PERIODIFICATION_TOLERANCE if tolerance is None else tolerance
    values = u.values
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return 0.0
    ends = float(max(np.max(np.abs(values[0])), np.max(np.abs(values[-1]))))
    if ends > tolerance * scale:
        raise PeriodificationError(
            f"grid function does not decay: end magnitude {ends:.3e} vs max {scale:.3e}"
        )

    n, h = u.grid.n_nodes, u.grid.h
    spectrum = h * sp_fft.rfft(values, axis=0)
    omega = 2.0 * np.pi * sp_fft.rfftfreq(n, d=h)
    d_omega = 2.0 * np.pi / (n * h)

    # Each retained frequency except 0 and Nyquist stands for a ± pair.
    multiplicity = np.full(omega.shape, 2.0)
    multiplicity[0] = 1.0
    if n % 2 == 0:
        multiplicity[-1] = 1.0

    power = np.sum(np.abs(spectrum) ** 2, axis=1)
    total = np.sum(multiplicity * omega ** (2.0 * order.alpha) * power) * d_omega / (2.0 * np.pi)
    return float(np.sqrt(total))


def power_rule_exact(t: np.ndarray, exponent: float, order: FracOrder) -> np.ndarray:
    """Riemann-Liouville derivative of t^γ from 0: Γ(γ+1)/Γ(γ+1-α)·t^{γ-α}"""
    coefficient = gamma(exponent + 1.0) / gamma(exponent + 1.0 - order.alpha)
    return coefficient * np.power(t, exponent - order.alpha)


def convergence_study(order: FracOrder,
                      exponent: float = 2.0,
                      node_counts: Sequence[int] = (257, 513, 1025, 2049),
                      interior: float = 0.1) -> pd.DataFrame:
    """
    Power-rule consistency table for the left derivative on [0, 1]

    Args:
        order: Fractional order
        exponent: Power γ of the test function t^γ
        node_counts: Grid sizes, each refining the previous by two
        interior: Lower end of the window used for relative errors

    Returns:
        DataFrame with errors, successive ratios and observed orders
    """
    results = []
    previous = None
    for n_nodes in node_counts:
        grid = Grid1D(a=0.0, b=1.0, n_nodes=n_nodes)
        t = grid.nodes
        u = GridFunction(grid=grid, values=t ** exponent)
        approx = left_frac_derivative(u, order).values[:, 0]
        exact = power_rule_exact(t, exponent, order)
        error = np.abs(approx - exact)
        window = t >= interior
        max_error = float(np.max(error))
        ratio = previous / max_error if previous is not None else np.nan
        results.append({
            'n_nodes': n_nodes,
            'h': grid.h,
            'max_error': max_error,
            'max_rel_error_interior': float(np.max(error[window] / np.abs(exact[window]))),
            'ratio': ratio,
            'observed_order': np.log2(ratio) if previous is not None else np.nan,
        })
        previous = max_error
    return pd.DataFrame(results)
