"""
Potentials and Weights

Concrete families for the nonlinearity W(t, u) and the matrix weight L(t).
All callables are vectorised over nodes: t has shape (m,), u has shape (m, n).
"""

import logging
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import HypothesisError

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]


class PotentialSpec(BaseModel):
    """Nonlinearity W with gradient, Ambrosetti-Rabinowitz exponent and dominating W̄"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = Field(..., description="Family name")
    theta: float = Field(..., gt=0.0, description="AR exponent θ")
    eval_W: Callable[[np.ndarray, np.ndarray], np.ndarray] = Field(..., description="W(t, u) -> (m,)")
    eval_gradW: Callable[[np.ndarray, np.ndarray], np.ndarray] = Field(..., description="∇W(t, u) -> (m, n)")
    eval_Wbar: Callable[[np.ndarray], np.ndarray] = Field(..., description="W̄(u) -> (m,)")
    a_bounds: Tuple[float, float] = Field((1.0, 1.0), description="Bounds (a_min, a_max) of the coefficient profile")


class WeightSpec(BaseModel):
    """Matrix weight L(t) with lower bound l(t), level c, well J and vanishing interval T = [0, t_end]"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = Field(..., description="Family name")
    n_components: int = Field(..., ge=1, description="Dimension n of the system")
    eval_L: Callable[[np.ndarray], np.ndarray] = Field(..., description="L(t) -> (m, n, n)")
    eval_l: ScalarField = Field(..., description="l(t) -> (m,)")
    c: float = Field(..., gt=0.0, description="Sublevel constant c")
    j_lo: float = Field(..., description="Left end of J")
    j_hi: float = Field(..., description="Right end of J")
    t_end: float = Field(..., gt=0.0, description="Right end of T = [0, t_end]")
    sublevel_measure_exact: Optional[float] = Field(None, description="Closed-form meas{l<c} when known")

    @model_validator(mode="after")
    def _check_intervals(self) -> "WeightSpec":
        if not self.j_lo < self.j_hi:
            raise ValueError(f"J must be a nonempty interval, got ({self.j_lo}, {self.j_hi})")
        if not (self.j_lo <= 0.0 and self.t_end <= self.j_hi):
            raise ValueError(f"T = [0, {self.t_end}] must lie in J = ({self.j_lo}, {self.j_hi})")
        return self

    def sublevel_measure(self, spacing: float = 1e-3, padding: float = 5.0) -> float:
        """meas{l < c} by grid counting on J widened by padding on both sides"""
        t = np.arange(self.j_lo - padding, self.j_hi + padding + 0.5 * spacing, spacing)
        return float(spacing * np.count_nonzero(self.eval_l(t) < self.c))


def constant_profile(value: float = 1.0) -> ScalarField:
    def profile(t: np.ndarray) -> np.ndarray:
        return np.full(np.shape(t), value, dtype=float)
    return profile


def cosine_profile(amplitude: float, modulation: float, period: float) -> ScalarField:
    """a(t) = amplitude·(1 + modulation·cos(2πt/period)), bounded in amplitude·(1 ± modulation)"""
    def profile(t: np.ndarray) -> np.ndarray:
        return amplitude * (1.0 + modulation * np.cos(2.0 * np.pi * np.asarray(t) / period))
    return profile


def _check_profile_bounds(a_bounds: Tuple[float, float]) -> None:
    a_min, a_max = a_bounds
    if not 0.0 < a_min <= a_max:
        raise ValueError(f"coefficient bounds must satisfy 0 < a_min <= a_max, got {a_bounds}")


def builtin_potential(theta: float,
                      epsilon: float,
                      a_profile: Optional[ScalarField] = None,
                      a_bounds: Tuple[float, float] = (1.0, 1.0)) -> PotentialSpec:
    """
    Two-power potential W = a(t)(|u|^θ + θ/(θ+ε)|u|^{θ+ε})

    Args:
        theta: AR exponent, must exceed 2
        epsilon: Extra growth exponent; 0 gives a pure power
        a_profile: Vectorised coefficient a(t), defaults to a ≡ 1
        a_bounds: (a_min, a_max) with a_min ≤ a(t) ≤ a_max

    Returns:
        PotentialSpec
    """
    if theta <= 2.0:
        raise HypothesisError(f"two-power potential needs theta > 2, got {theta}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    _check_profile_bounds(a_bounds)
    a = a_profile or constant_profile(a_bounds[1])
    a_max = a_bounds[1]
    upper = theta + epsilon
    ratio = theta / upper

    def eval_W(t: np.ndarray, u: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(u, axis=-1)
        return a(t) * (r ** theta + ratio * r ** upper)

    def eval_gradW(t: np.ndarray, u: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(u, axis=-1)
        radial = theta * (r ** (theta - 2.0) + r ** (upper - 2.0))
        return (a(t) * radial)[..., None] * u

    def eval_Wbar(u: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(u, axis=-1)
        value = r ** theta + ratio * r ** upper
        slope = theta * (r ** (theta - 1.0) + r ** (upper - 1.0))
        return a_max * (value + slope)

    return PotentialSpec(
        name="two_power",
        theta=theta,
        eval_W=eval_W,
        eval_gradW=eval_gradW,
        eval_Wbar=eval_Wbar,
        a_bounds=a_bounds,
    )


def power_potential(theta: float,
                    a_profile: Optional[ScalarField] = None,
                    a_bounds: Tuple[float, float] = (1.0, 1.0)) -> PotentialSpec:
    """
    Homogeneous potential W = a(t)|u|^θ

    Admits θ ≤ 2 so that the validators can be exercised on potentials
    violating the AR condition.
    """
    if theta <= 1.0:
        raise ValueError(f"power potential needs theta > 1, got {theta}")
    _check_profile_bounds(a_bounds)
    a = a_profile or constant_profile(a_bounds[1])
    a_max = a_bounds[1]

    def eval_W(t: np.ndarray, u: np.ndarray) -> np.ndarray:
        return a(t) * np.linalg.norm(u, axis=-1) ** theta

    def eval_gradW(t: np.ndarray, u: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(u, axis=-1)
        return (a(t) * theta * r ** (theta - 2.0))[..., None] * u

    def eval_Wbar(u: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(u, axis=-1)
        return a_max * (r ** theta + theta * r ** (theta - 1.0))

    return PotentialSpec(
        name="power",
        theta=theta,
        eval_W=eval_W,
        eval_gradW=eval_gradW,
        eval_Wbar=eval_Wbar,
        a_bounds=a_bounds,
    )


def smooth_ramp(x: np.ndarray) -> np.ndarray:
    """Smoothstep 3x² − 2x³ clamped to [0, 1]"""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def smooth_ramp_inverse(y: float) -> float:
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"ramp values lie in [0, 1], got {y}")
    return float(0.5 - np.sin(np.arcsin(1.0 - 2.0 * y) / 3.0))


def _distance_to_interval(t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.maximum(0.0, np.maximum(lo - t, t - hi))


def sublevel_measure_closed_form(c: float, l_max: float, j_lo: float, j_hi: float, ramp: float) -> float:
    """meas{l < c} = |J| + 2·ramp·s⁻¹(c/l_max)"""
    return (j_hi - j_lo) + 2.0 * ramp * smooth_ramp_inverse(c / l_max)


def builtin_weight(n: int,
                   c: float,
                   l_max: float,
                   j_lo: float,
                   j_hi: float,
                   t_end: float,
                   ramp: float,
                   vanishing_set: Literal["T", "J"] = "T",
                   c_inf: Optional[float] = None) -> WeightSpec:
    """
    Ramp weight l(t) = l_max·s(dist(t, J)/ramp)

    The matrix weight is a multiple of the identity. With vanishing_set="T"
    it ramps away from T instead of J, so L(t) ≥ l(t)·I still holds while the
    well is exactly T̄; vanishing_set="J" takes L = l·I.

    Args:
        n: Number of components
        c: Sublevel constant, 0 < c < l_max
        l_max: Saturation value of l
        j_lo, j_hi: The well J = (j_lo, j_hi)
        t_end: Right end of T = [0, t_end]
        ramp: Width of the transition layer
        vanishing_set: Set on which L vanishes
        c_inf: Embedding constant; when given, meas{l<c} < 1/c_inf² is enforced

    Returns:
        WeightSpec
    """
    if not 0.0 < c < l_max:
        raise ValueError(f"weight needs 0 < c < l_max, got c={c}, l_max={l_max}")
    if ramp <= 0.0:
        raise ValueError(f"ramp must be positive, got {ramp}")

    well = (j_lo, j_hi) if vanishing_set == "J" else (0.0, t_end)

    def eval_l(t: np.ndarray) -> np.ndarray:
        return l_max * smooth_ramp(_distance_to_interval(t, j_lo, j_hi) / ramp)

    def eval_L(t: np.ndarray) -> np.ndarray:
        level = l_max * smooth_ramp(_distance_to_interval(t, *well) / ramp)
        return level[:, None, None] * np.eye(n)[None, :, :]

    measure = sublevel_measure_closed_form(c, l_max, j_lo, j_hi, ramp)
    if c_inf is not None and measure * c_inf ** 2 >= 1.0:
        raise HypothesisError(
            f"meas{{l<c}} = {measure:.4f} is not below 1/C_inf^2 = {1.0 / c_inf ** 2:.4f}"
        )

    return WeightSpec(
        name=f"ramp_{vanishing_set}",
        n_components=n,
        eval_L=eval_L,
        eval_l=eval_l,
        c=c,
        j_lo=j_lo,
        j_hi=j_hi,
        t_end=t_end,
        sublevel_measure_exact=measure,
    )
