"""
Function Spaces

Norms, inner products and embedding-constant estimation for L^p, H^α and
the weighted space X^{α,λ}.
"""

import logging
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import gamma

from ..exceptions import GridMismatchError
from ..hypotheses.potentials import WeightSpec
from .fracops import (
    FracOrder,
    Grid1D,
    GridFunction,
    StiffnessForm,
    fourier_seminorm,
)

logger = logging.getLogger(__name__)

# Relative slack for inequalities evaluated in floating point
_SLACK = 1e-12


class EmbeddingEstimate(BaseModel):
    """Sampled embedding constant and the derived (ℒ1) quantities"""
    c_inf_lower: float = Field(..., gt=0.0, description="Sampled lower bound for C_∞")
    sample_count: int = Field(..., ge=1, description="Number of sampled bumps")
    meas_sublevel: Optional[float] = Field(None, description="meas{l<c}")
    theta_const: Optional[float] = Field(None, description="Θ = (1 − C²m)/(C²m), set when C²m < 1")
    lambda_threshold: Optional[float] = Field(None, description="1/(c·C_∞²·meas{l<c})")

    @property
    def sublevel_product(self) -> Optional[float]:
        if self.meas_sublevel is None:
            return None
        return self.c_inf_lower ** 2 * self.meas_sublevel

    @property
    def admissible(self) -> bool:
        product = self.sublevel_product
        return product is not None and product < 1.0

    def complete(self, meas_sublevel: float, c: float) -> "EmbeddingEstimate":
        """Fill in Θ and the λ-threshold for a weight with level c"""
        product = self.c_inf_lower ** 2 * meas_sublevel
        theta_const = (1.0 - product) / product if product < 1.0 else None
        return self.model_copy(update={
            'meas_sublevel': meas_sublevel,
            'theta_const': theta_const,
            'lambda_threshold': 1.0 / (c * product),
        })


class NormReport(BaseModel):
    l2: float = Field(..., ge=0.0)
    lp: Dict[float, float] = Field(default_factory=dict, description="L^p norms by exponent")
    linf: float = Field(..., ge=0.0)
    h_alpha: float = Field(..., ge=0.0)
    x_alpha_lambda: Optional[float] = Field(None, ge=0.0)

    @property
    def interpolation_holds(self) -> bool:
        """‖u‖_p^p ≤ ‖u‖_∞^{p−2}‖u‖_2² for every finite stored p ≥ 2"""
        for p, value in self.lp.items():
            if np.isfinite(p) and p >= 2.0:
                if value ** p > self.linf ** (p - 2.0) * self.l2 ** 2 * (1.0 + _SLACK):
                    return False
        return True


class InequalityReport(BaseModel):
    """Outcome of a family of norm inequalities"""
    applicable: bool = True
    reason: Optional[str] = None
    checks: Dict[str, bool] = Field(default_factory=dict)
    lhs: Dict[str, float] = Field(default_factory=dict)
    rhs: Dict[str, float] = Field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return self.applicable and all(self.checks.values())

    def record(self, name: str, lhs: float, rhs: float) -> None:
        self.lhs[name] = float(lhs)
        self.rhs[name] = float(rhs)
        self.checks[name] = bool(lhs <= rhs * (1.0 + _SLACK) + 1e-300)


def _require_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.grid != v.grid or u.n_components != v.n_components:
        raise GridMismatchError("grid functions live on different grids or component counts")


def l2_norm(u: GridFunction) -> float:
    q = u.grid.quadrature_weights()
    return float(np.sqrt(np.sum(q * u.magnitude ** 2)))


def lp_norm(u: GridFunction, p: float) -> float:
    if np.isinf(p):
        return float(np.max(u.magnitude))
    q = u.grid.quadrature_weights()
    return float(np.sum(q * u.magnitude ** p) ** (1.0 / p))


def h_alpha_norm(u: GridFunction, order: FracOrder) -> float:
    """(‖u‖²_{L²} + |u|²_α)^{1/2} with the Fourier semi-norm"""
    return float(np.hypot(l2_norm(u), fourier_seminorm(u, order)))


def weight_integral(u: GridFunction, v: GridFunction, weight: WeightSpec) -> float:
    """Trapezoid quadrature of (L(t)u, v)"""
    _require_same_grid(u, v)
    q = u.grid.quadrature_weights()
    L = weight.eval_L(u.grid.nodes)
    return float(np.einsum('i,ij,ijk,ik->', q, u.values, L, v.values))


def x_alpha_lambda_inner(u: GridFunction,
                         v: GridFunction,
                         lam: float,
                         weight: WeightSpec,
                         order: FracOrder,
                         form: Optional[StiffnessForm] = None) -> float:
    """
    ⟨u, v⟩ = h Σ (D_L u)·(D_L v) + λ Σ q_i (L(t_i)u_i, v_i)

    Args:
        u, v: Grid functions on the same grid
        lam: Weight parameter λ > 0
        weight: Matrix weight
        order: Fractional order
        form: Prebuilt stiffness form on the same grid (optional)

    Returns:
        Inner product value
    """
    _require_same_grid(u, v)
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if weight.n_components != u.n_components:
        raise GridMismatchError("weight dimension does not match the grid function")
    form = form or StiffnessForm(order, u.grid)
    if form.grid != u.grid:
        raise GridMismatchError("stiffness form built on another grid")
    du = form.derivative.apply(u.values)
    dv = form.derivative.apply(v.values)
    stiffness = u.grid.h * float(np.sum(du * dv))
    return stiffness + lam * weight_integral(u, v, weight)


def x_alpha_lambda_norm(u: GridFunction, lam: float, weight: WeightSpec, order: FracOrder,
                        form: Optional[StiffnessForm] = None) -> float:
    return float(np.sqrt(max(x_alpha_lambda_inner(u, u, lam, weight, order, form), 0.0)))


def embedding_ratio(u: GridFunction, order: FracOrder) -> float:
    """‖u‖_∞ / ‖u‖_α"""
    return float(np.max(u.magnitude) / h_alpha_norm(u, order))


def sample_bump_ratios(order: FracOrder, sample_count: int, rng_seed: int,
                       grid: Optional[Grid1D] = None) -> np.ndarray:
    """
    Embedding ratios of Gaussian bumps with widths in [0.05, 0.8]

    Samples are drawn one after another from a single generator, so a
    shorter run sees a prefix of a longer one.
    """
    grid = grid or Grid1D(a=-8.0, b=8.0, n_nodes=4096)
    rng = np.random.default_rng(rng_seed)
    t = grid.nodes
    ratios = np.empty(sample_count)
    for k in range(sample_count):
        width = rng.uniform(0.05, 0.8)
        center = rng.uniform(-1.0, 1.0)
        bump = GridFunction(grid=grid, values=np.exp(-0.5 * ((t - center) / width) ** 2))
        ratios[k] = embedding_ratio(bump, order)
    return ratios


@lru_cache(maxsize=32)
def estimate_c_inf(order: FracOrder, sample_count: int, rng_seed: int) -> EmbeddingEstimate:
    """
    Sampled lower bound for the embedding constant of H^α into L^∞

    Args:
        order: Fractional order
        sample_count: Number of random bumps
        rng_seed: Seed of the sampler

    Returns:
        Partial EmbeddingEstimate (C_∞ only)
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    ratios = sample_bump_ratios(order, sample_count, rng_seed)
    c_inf = float(np.max(ratios))
    logger.info("C_inf lower bound %.6f from %d samples (alpha=%.3f)", c_inf, sample_count, order.alpha)
    return EmbeddingEstimate(c_inf_lower=c_inf, sample_count=sample_count)


def check_norm_equivalence(u: GridFunction,
                           lam: float,
                           weight: WeightSpec,
                           est: EmbeddingEstimate,
                           order: FracOrder,
                           p_values: Sequence[float] = (2.0, 4.0, np.inf)) -> InequalityReport:
    """
    L², H^α and L^p bounds in terms of the X^{α,λ} norm above the λ-threshold

    Returns a report marked not applicable when λ lies below the threshold
    or (ℒ1) fails for the estimate.
    """
    report = InequalityReport()
    if est.theta_const is None or est.lambda_threshold is None:
        report.applicable = False
        report.reason = "not applicable: embedding estimate lacks an admissible Θ"
        return report
    if lam < est.lambda_threshold:
        report.applicable = False
        report.reason = f"not applicable: lambda {lam:g} below threshold {est.lambda_threshold:.4g}"
        return report

    theta_const = est.theta_const
    x_sq = x_alpha_lambda_inner(u, u, lam, weight, order)
    x_norm = np.sqrt(max(x_sq, 0.0))
    l2 = l2_norm(u)
    report.record("l2", l2 ** 2, x_sq / theta_const)
    report.record("h_alpha", h_alpha_norm(u, order) ** 2, (1.0 + 1.0 / theta_const) * x_sq)
    for p in p_values:
        if np.isinf(p):
            bound = est.c_inf_lower * np.sqrt(1.0 + 1.0 / theta_const) * x_norm
            report.record("linf", lp_norm(u, p), bound)
        else:
            constant = theta_const ** (-p / 2.0) * est.meas_sublevel ** (-(p - 2.0) / 2.0)
            report.record(f"l{p:g}", lp_norm(u, p) ** p, constant * x_norm ** p)
    return report


def norm_report(u: GridFunction,
                order: FracOrder,
                lam: Optional[float] = None,
                weight: Optional[WeightSpec] = None,
                p_values: Iterable[float] = (2.0, 4.0, 6.0)) -> NormReport:
    x_value = None
    if lam is not None and weight is not None:
        x_value = x_alpha_lambda_norm(u, lam, weight, order)
    return NormReport(
        l2=l2_norm(u),
        lp={float(p): lp_norm(u, p) for p in p_values},
        linf=lp_norm(u, np.inf),
        h_alpha=h_alpha_norm(u, order),
        x_alpha_lambda=x_value,
    )


def check_interval_inequalities(u: GridFunction, order: FracOrder) -> InequalityReport:
    """
    Fractional Poincaré and sup bounds on [a, b] for p = q = 2

    ‖u‖_{L²} ≤ L^α/Γ(α+1)·‖D^α u‖_{L²} and
    ‖u‖_∞ ≤ L^{α−1/2}/(Γ(α)(2α−1)^{1/2})·‖D^α u‖_{L²}, with D^α the
    left derivative from the left end and L = b − a.
    """
    report = InequalityReport()
    alpha = order.alpha
    length = u.grid.b - u.grid.a
    derivative = u.with_values(StiffnessForm(order, u.grid).derivative.apply(u.values))
    d_norm = l2_norm(derivative)
    report.record("poincare_l2", l2_norm(u), length ** alpha / gamma(alpha + 1.0) * d_norm)
    if alpha > 0.5:
        sup_constant = length ** (alpha - 0.5) / (gamma(alpha) * np.sqrt(2.0 * alpha - 1.0))
        report.record("sup", lp_norm(u, np.inf), sup_constant * d_norm)
    return report
