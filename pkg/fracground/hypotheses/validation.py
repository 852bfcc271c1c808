"""
Hypothesis Validation

Sampled checks of the structural hypotheses on W and L. Checks never raise
for a failed property; failures are report entries with a witness.
"""

import logging
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from .potentials import PotentialSpec, WeightSpec

logger = logging.getLogger(__name__)


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    WARNING = "warning"


class HypothesisCheck(BaseModel):
    """Result of one hypothesis check"""
    name: str = Field(..., description="Hypothesis identifier")
    status: CheckStatus = Field(..., description="Outcome")
    message: str = Field("", description="Human-readable detail")
    witness_t: Optional[float] = Field(None, description="Time of the worst sample")
    witness_u: Optional[List[float]] = Field(None, description="State of the worst sample")
    violation: Optional[float] = Field(None, description="Magnitude at the worst sample")


class ValidationReport(BaseModel):
    checks: List[HypothesisCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.status is not CheckStatus.FAIL for check in self.checks)

    @property
    def failures(self) -> List[HypothesisCheck]:
        return [check for check in self.checks if check.status is CheckStatus.FAIL]

    def get(self, name: str) -> HypothesisCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(checks=self.checks + other.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([check.model_dump() for check in self.checks])


class SamplePlan(BaseModel):
    """Sample lattices used by the validators"""
    n_times: int = Field(41, ge=2, description="Time samples spread over J widened by t_padding")
    t_padding: float = Field(1.0, ge=0.0, description="Margin around J for time samples")
    magnitudes: Tuple[float, ...] = Field((1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3))
    growth_magnitudes: Tuple[float, ...] = Field((10.0, 100.0, 1000.0))
    small_magnitudes: Tuple[float, ...] = Field((1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
    small_ratio_tolerance: float = Field(1e-3, gt=0.0, description="Bound on |∇W|/|u| at the smallest |u|")
    n_directions: int = Field(8, ge=1)
    s_grid: Tuple[float, float, int] = Field((1e-2, 1e2, 41), description="Geometric s-grid (start, stop, count)")
    fd_step: float = Field(1e-5, gt=0.0, description="Relative finite-difference step")
    fd_tolerance: float = Field(1e-6, gt=0.0)
    measure_spacing: float = Field(1e-3, gt=0.0)
    measure_padding: float = Field(5.0, ge=0.0)
    seed: int = 0


def _directions(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal((count, n))
    d[0] = np.eye(n)[0]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _lattice(times: np.ndarray, magnitudes: Sequence[float], directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """All combinations t × r·d flattened to t (P,), u (P, n)"""
    states = np.asarray(magnitudes)[:, None, None] * directions[None, :, :]
    states = states.reshape(-1, directions.shape[1])
    t = np.repeat(times, states.shape[0])
    u = np.tile(states, (times.size, 1))
    return t, u


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum('ij,ij->i', a, b)


def _result(name: str, bad: np.ndarray, score: np.ndarray, t: np.ndarray, u: np.ndarray,
            ok_message: str, fail_message: str) -> HypothesisCheck:
    worst = int(np.argmax(score))
    witness = dict(witness_t=float(t[worst]), witness_u=u[worst].tolist(), violation=float(score[worst]))
    if np.any(bad):
        return HypothesisCheck(name=name, status=CheckStatus.FAIL, message=fail_message, **witness)
    return HypothesisCheck(name=name, status=CheckStatus.PASS, message=ok_message, **witness)


def check_ambrosetti_rabinowitz(pot: PotentialSpec, t: np.ndarray, u: np.ndarray) -> HypothesisCheck:
    """0 < θW(t,u) ≤ (∇W(t,u), u) with θ > 2"""
    theta = pot.theta
    W = pot.eval_W(t, u)
    dot = _dot(pot.eval_gradW(t, u), u)
    excess = theta * W - dot
    bad = (W <= 0.0) | (excess > 1e-12 * np.maximum(np.abs(dot), 1e-300))
    score = excess / np.maximum(np.abs(dot), 1e-300)
    if theta <= 2.0:
        worst = int(np.argmax(score))
        return HypothesisCheck(
            name="W1", status=CheckStatus.FAIL,
            message=f"AR exponent theta={theta:g} is not above 2",
            witness_t=float(t[worst]), witness_u=u[worst].tolist(), violation=2.0 - theta,
        )
    return _result("W1", bad, score, t, u,
                   "0 < theta*W <= (gradW, u) on the lattice",
                   "AR inequality violated")


def check_superquadratic(pot: PotentialSpec, times: np.ndarray, directions: np.ndarray,
                         magnitudes: Sequence[float]) -> HypothesisCheck:
    """W(t, r·d)/r² strictly increasing along the growth magnitudes"""
    r = np.asarray(magnitudes)
    ratios = []
    for radius in r:
        t, u = _lattice(times, [radius], directions)
        ratios.append(pot.eval_W(t, u) / radius ** 2)
    ratios = np.array(ratios)
    steps = np.diff(ratios, axis=0)
    score = -np.min(steps, axis=0) / np.maximum(np.abs(ratios[0]), 1e-300)
    t, u = _lattice(times, [r[-1]], directions)
    return _result("W1_growth", np.any(steps <= 0.0, axis=0), score, t, u,
                   "W/|u|^2 grows along every sampled ray",
                   "W/|u|^2 does not grow along a sampled ray")


def check_small_gradient(pot: PotentialSpec, times: np.ndarray, directions: np.ndarray,
                         magnitudes: Sequence[float], tolerance: float) -> HypothesisCheck:
    """|∇W(t,u)|/|u| decreasing to below tolerance along shrinking |u|"""
    ratios = []
    for radius in magnitudes:
        t, u = _lattice(times, [radius], directions)
        ratios.append(np.linalg.norm(pot.eval_gradW(t, u), axis=1) / radius)
    ratios = np.array(ratios)
    growing = np.any(np.diff(ratios, axis=0) > 1e-12 * np.maximum(ratios[:-1], 1e-300), axis=0)
    bad = growing | (ratios[-1] > tolerance)
    t, u = _lattice(times, [magnitudes[-1]], directions)
    return _result("W2", bad, ratios[-1], t, u,
                   f"|gradW|/|u| below {tolerance:g} at |u|={magnitudes[-1]:g}",
                   "|gradW|/|u| does not vanish as u -> 0")


def check_domination(pot: PotentialSpec, t: np.ndarray, u: np.ndarray) -> HypothesisCheck:
    """|W(t,u)| + |∇W(t,u)| ≤ W̄(u)"""
    lhs = np.abs(pot.eval_W(t, u)) + np.linalg.norm(pot.eval_gradW(t, u), axis=1)
    rhs = pot.eval_Wbar(u)
    score = (lhs - rhs) / np.maximum(rhs, 1e-300)
    return _result("W3", score > 1e-12, score, t, u,
                   "|W| + |gradW| dominated by Wbar",
                   "Wbar fails to dominate")


def check_fibering_monotonicity(pot: PotentialSpec, t: np.ndarray, u: np.ndarray,
                                s_grid: Tuple[float, float, int]) -> HypothesisCheck:
    """s ↦ (∇W(t, s·q), q)/s^{θ−1} increasing on a geometric s-grid"""
    s = np.geomspace(*s_grid)
    values = np.array([_dot(pot.eval_gradW(t, sk * u), u) / sk ** (pot.theta - 1.0) for sk in s])
    steps = np.diff(values, axis=0) / np.maximum(np.max(np.abs(values), axis=0), 1e-300)
    score = -np.min(steps, axis=0)
    worst = int(np.argmax(score))
    witness = dict(witness_t=float(t[worst]), witness_u=u[worst].tolist(), violation=float(score[worst]))
    if np.any(steps < -1e-10):
        return HypothesisCheck(name="W4", status=CheckStatus.FAIL,
                               message="fibering ratio decreases", **witness)
    if np.all(steps > 1e-12):
        return HypothesisCheck(name="W4", status=CheckStatus.PASS,
                               message="fibering ratio strictly increasing", **witness)
    return HypothesisCheck(name="W4", status=CheckStatus.WARNING,
                           message="warning: non-strict monotonicity", **witness)


def check_power_bounds(pot: PotentialSpec, t: np.ndarray, u: np.ndarray) -> HypothesisCheck:
    """a_min·|u|^θ ≤ W(t,u) for |u| ≥ 1 and W(t,u) ≤ 2a_max·|u|^θ for |u| ≤ 1"""
    a_min, a_max = pot.a_bounds
    r_theta = np.linalg.norm(u, axis=1) ** pot.theta
    W = pot.eval_W(t, u)
    large = np.linalg.norm(u, axis=1) >= 1.0
    lower = np.where(large, (a_min * r_theta - W) / np.maximum(a_min * r_theta, 1e-300), -np.inf)
    upper = np.where(~large, (W - 2.0 * a_max * r_theta) / np.maximum(2.0 * a_max * r_theta, 1e-300), -np.inf)
    score = np.maximum(lower, upper)
    return _result("W_bounds", score > 1e-12, score, t, u,
                   "a_min|u|^theta <= W for |u| >= 1 and W <= 2a_max|u|^theta for |u| <= 1",
                   "W leaves the power envelope")


def check_excess_monotonicity(pot: PotentialSpec, t: np.ndarray, u: np.ndarray,
                              s_grid: Tuple[float, float, int]) -> HypothesisCheck:
    """s ↦ (∇W(t, s·u), s·u) − θW(t, s·u) non-decreasing on a geometric s-grid"""
    s = np.geomspace(*s_grid)
    dots = np.array([_dot(pot.eval_gradW(t, sk * u), sk * u) for sk in s])
    thetaW = np.array([pot.theta * pot.eval_W(t, sk * u) for sk in s])
    scale = np.maximum(np.max(np.abs(dots) + np.abs(thetaW), axis=0), 1e-300)
    steps = np.diff(dots - thetaW, axis=0) / scale
    score = -np.min(steps, axis=0)
    return _result("W_excess", score > 1e-10, score, t, u,
                   "(gradW(su), su) - theta*W(su) non-decreasing in s",
                   "(gradW(su), su) - theta*W(su) decreases along a ray")


def check_gradient_consistency(pot: PotentialSpec, t: np.ndarray, u: np.ndarray,
                               step: float, tolerance: float) -> HypothesisCheck:
    """∇W against central differences of W with step δ = step·|u|"""
    n = u.shape[1]
    grad = pot.eval_gradW(t, u)
    delta = step * np.linalg.norm(u, axis=1)
    numeric = np.empty_like(u)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        shift = delta[:, None] * e[None, :]
        numeric[:, k] = (pot.eval_W(t, u + shift) - pot.eval_W(t, u - shift)) / (2.0 * delta)
    error = np.linalg.norm(numeric - grad, axis=1) / np.maximum(np.linalg.norm(grad, axis=1), 1e-300)
    return _result("gradient", error > tolerance, error, t, u,
                   "gradient matches central differences",
                   "gradient inconsistent with W")


def validate_potential(pot: PotentialSpec, n_components: int,
                       times: np.ndarray, plan: Optional[SamplePlan] = None) -> ValidationReport:
    """(W1)-(W4), the power envelope, excess monotonicity and gradient consistency on the sample lattice"""
    plan = plan or SamplePlan()
    rng = np.random.default_rng(plan.seed)
    directions = _directions(n_components, plan.n_directions, rng)
    t, u = _lattice(times, plan.magnitudes, directions)
    fd_magnitudes = [m for m in plan.magnitudes if 1e-3 <= m <= 1e3]
    t_fd, u_fd = _lattice(times, fd_magnitudes, directions)
    # (W4) samples moderate states; huge s·|q| only tests floating point
    t_w4, u_w4 = _lattice(times, [m for m in plan.magnitudes if 1e-2 <= m <= 1e2], directions)
    checks = [
        check_ambrosetti_rabinowitz(pot, t, u),
        check_superquadratic(pot, times, directions, plan.growth_magnitudes),
        check_small_gradient(pot, times, directions, plan.small_magnitudes, plan.small_ratio_tolerance),
        check_domination(pot, t, u),
        check_fibering_monotonicity(pot, t_w4, u_w4, plan.s_grid),
        check_power_bounds(pot, t, u),
        check_excess_monotonicity(pot, t_w4, u_w4, plan.s_grid),
        check_gradient_consistency(pot, t_fd, u_fd, plan.fd_step, plan.fd_tolerance),
    ]
    return ValidationReport(checks=checks)


def validate_weight(weight: WeightSpec, times: np.ndarray, plan: Optional[SamplePlan] = None,
                    c_inf: Optional[float] = None) -> ValidationReport:
    """Symmetry, eigenvalue bound, sublevel measure and support checks for L"""
    plan = plan or SamplePlan()
    n = weight.n_components
    checks: List[HypothesisCheck] = []
    zero = [0.0] * n

    L = weight.eval_L(times)
    l = weight.eval_l(times)
    scale = max(float(np.max(np.abs(L))), 1.0)
    asymmetry = np.max(np.abs(L - np.transpose(L, (0, 2, 1))), axis=(1, 2))
    eig_gap = l - np.linalg.eigvalsh(L)[:, 0]
    score = np.maximum(asymmetry, eig_gap) / scale
    worst = int(np.argmax(score))
    status = CheckStatus.FAIL if score[worst] > 1e-12 else CheckStatus.PASS
    checks.append(HypothesisCheck(
        name="L1_matrix", status=status,
        message="L symmetric with (L u, u) >= l |u|^2" if status is CheckStatus.PASS
        else "L asymmetric or below l",
        witness_t=float(times[worst]), witness_u=zero, violation=float(score[worst]),
    ))

    measure = weight.sublevel_measure(plan.measure_spacing, plan.measure_padding)
    if c_inf is None:
        status, message, violation = CheckStatus.WARNING, "C_inf unavailable, sublevel bound unchecked", None
    else:
        product = c_inf ** 2 * measure
        status = CheckStatus.PASS if product < 1.0 else CheckStatus.FAIL
        message = f"C_inf^2 * meas{{l<c}} = {product:.4f}"
        violation = product - 1.0
    checks.append(HypothesisCheck(
        name="L1_sublevel", status=status, message=message,
        witness_t=weight.j_hi, witness_u=zero, violation=violation,
    ))

    inside = np.linspace(weight.j_lo, weight.j_hi, plan.n_times)
    outside = np.concatenate([
        np.linspace(weight.j_lo - plan.t_padding, weight.j_lo - 1e-3, plan.n_times),
        np.linspace(weight.j_hi + 1e-3, weight.j_hi + plan.t_padding, plan.n_times),
    ])
    l_in = np.abs(weight.eval_l(inside))
    l_out = weight.eval_l(outside)
    if np.any(l_in > 0.0):
        k = int(np.argmax(l_in))
        checks.append(HypothesisCheck(name="L2", status=CheckStatus.FAIL, message="l nonzero on closure of J",
                                      witness_t=float(inside[k]), witness_u=zero, violation=float(l_in[k])))
    elif np.any(l_out <= 0.0):
        k = int(np.argmin(l_out))
        checks.append(HypothesisCheck(name="L2", status=CheckStatus.FAIL, message="l vanishes outside J",
                                      witness_t=float(outside[k]), witness_u=zero, violation=float(-l_out[k])))
    else:
        checks.append(HypothesisCheck(name="L2", status=CheckStatus.PASS,
                                      message="zero set of l is the closure of J"))

    t_closure = np.linspace(0.0, weight.t_end, plan.n_times)
    L_T = np.max(np.abs(weight.eval_L(t_closure)), axis=(1, 2))
    k = int(np.argmax(L_T))
    status = CheckStatus.FAIL if L_T[k] > 0.0 else CheckStatus.PASS
    checks.append(HypothesisCheck(
        name="L3", status=status,
        message="L vanishes on the closure of T" if status is CheckStatus.PASS else "L nonzero on T",
        witness_t=float(t_closure[k]), witness_u=zero, violation=float(L_T[k]),
    ))
    return ValidationReport(checks=checks)


def validate_hypotheses(pot: PotentialSpec,
                        weight: WeightSpec,
                        plan: Optional[SamplePlan] = None,
                        c_inf: Optional[float] = None) -> ValidationReport:
    """
    Check (W1)-(W4) and (ℒ1)-(ℒ3) on sample lattices

    Args:
        pot: Potential under test
        weight: Weight under test
        plan: Sample lattices
        c_inf: Embedding constant for the sublevel-measure bound

    Returns:
        ValidationReport
    """
    plan = plan or SamplePlan()
    times = np.linspace(weight.j_lo - plan.t_padding, weight.j_hi + plan.t_padding, plan.n_times)
    report = validate_potential(pot, weight.n_components, times, plan)
    report = report.merge(validate_weight(weight, times, plan, c_inf))
    for check in report.failures:
        logger.warning("hypothesis %s failed: %s (violation %s)", check.name, check.message, check.violation)
    return report
