"""
Ground-State Solver

Problem assembly and end-to-end ground-state computation for the
truncated-line problem and for the Dirichlet problem on T = [0, t_end].
"""

import logging
import math
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config.settings import defaults
from ..exceptions import ConvergenceError, GridMismatchError, HypothesisError
from ..hypotheses.potentials import PotentialSpec, WeightSpec
from ..hypotheses.validation import SamplePlan, ValidationReport, validate_hypotheses, validate_potential
from ..operators.fracops import FracOrder, Grid1D, GridFunction
from ..operators.spaces import EmbeddingEstimate, check_interval_inequalities, estimate_c_inf
from .nehari import (
    EnergyFunctional,
    OptimizerOptions,
    ReducedMinimization,
    multistart,
    nehari_energy_identity,
)

logger = logging.getLogger(__name__)

MIN_NODES_IN_T = 64


class ProblemConfig(BaseModel):
    """Complete description of one ground-state computation"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    order: FracOrder
    lam: float = Field(..., gt=0.0, description="Weight parameter λ (ignored by the Dirichlet problem)")
    truncation_R: float = Field(..., gt=0.0, description="Half-width of the truncated line")
    t_end: float = Field(..., gt=0.0, description="Right end of T = [0, t_end]")
    n_nodes: int = Field(..., ge=3, description="Requested node count on [-R, R]")
    n_components: int = Field(1, ge=1)
    potential: PotentialSpec
    weight: WeightSpec
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)
    starts: int = Field(20, ge=1, description="Random starts per solve")
    seed: int = Field(0, description="Seed of the first random start")
    boundary_tolerance: float = Field(default_factory=lambda: defaults.BOUNDARY_TOLERANCE)
    c_inf: Optional[float] = Field(None, gt=0.0, description="Embedding constant override")
    embedding_samples: int = Field(64, ge=1)
    embedding_seed: int = 0

    @model_validator(mode="after")
    def _check_problem(self) -> "ProblemConfig":
        if not 0.5 < self.order.alpha < 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.order.alpha}")
        if not self.t_end < self.truncation_R:
            raise ValueError("T must lie strictly inside [-R, R]")
        if self.weight.n_components != self.n_components:
            raise ValueError("weight dimension does not match n_components")
        if abs(self.weight.t_end - self.t_end) > 1e-12:
            raise ValueError("weight and problem disagree on t_end")
        intervals = _intervals_in_t(self.t_end, self.truncation_R, self.n_nodes)
        if intervals + 1 < MIN_NODES_IN_T:
            raise ValueError(f"grid resolves T with {intervals + 1} nodes, need {MIN_NODES_IN_T}")
        return self


def _intervals_in_t(t_end: float, truncation_R: float, n_nodes: int) -> int:
    return max(1, round(t_end * (n_nodes - 1) / (2.0 * truncation_R)))


class LineDiscretization(BaseModel):
    """Line grid on [-R', R'] on which 0 and t_end are nodes"""
    model_config = ConfigDict(frozen=True)

    grid: Grid1D
    t_start: int = Field(..., description="Index of t = 0")
    t_stop: int = Field(..., description="Index of t = t_end")

    @property
    def line_free(self):
        return 1, self.grid.n_nodes - 1

    @property
    def bvp_free(self):
        """Nodes of the closed T; the Dirichlet values sit on the zero nodes next to it"""
        return self.t_start, self.t_stop + 1

    def bvp_grid(self) -> Grid1D:
        t_end = self.grid.h * (self.t_stop - self.t_start)
        return Grid1D(a=0.0, b=t_end, n_nodes=self.t_stop - self.t_start + 1)

    def outside_t(self) -> np.ndarray:
        mask = np.ones(self.grid.n_nodes, dtype=bool)
        mask[self.t_start:self.t_stop + 1] = False
        return mask


def build_discretization(config: ProblemConfig) -> LineDiscretization:
    intervals = _intervals_in_t(config.t_end, config.truncation_R, config.n_nodes)
    h = config.t_end / intervals
    half = math.ceil(config.truncation_R / h - 1e-9)
    grid = Grid1D(a=-half * h, b=half * h, n_nodes=2 * half + 1)
    return LineDiscretization(grid=grid, t_start=half, t_stop=half + intervals)


def zero_extend(u: GridFunction, grid: Grid1D) -> GridFunction:
    """Extend u by zero to a grid with the same spacing containing it"""
    offset_float = (u.grid.a - grid.a) / grid.h
    offset = int(round(offset_float))
    aligned = abs(u.grid.h - grid.h) <= 1e-12 * grid.h and abs(offset_float - offset) <= 1e-9
    if not aligned or offset < 0 or offset + u.grid.n_nodes > grid.n_nodes:
        raise GridMismatchError("grid function is not aligned with the target grid")
    values = np.zeros((grid.n_nodes, u.n_components))
    values[offset:offset + u.grid.n_nodes] = u.values
    return GridFunction(grid=grid, values=values)


class StartSummary(BaseModel):
    seed: int
    energy: float
    converged: bool
    status: str
    iterations: int
    gradient_norm: float


class GroundState(BaseModel):
    """Best multistart candidate with diagnostics"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    problem: Literal["line", "bvp"]
    lam: Optional[float] = None
    u: GridFunction
    energy: float
    gradient_norm: float = Field(..., description="Full gradient norm in X^{α,λ}")
    nehari_residual: float
    x_norm: float
    boundary_magnitude: float
    multistart_spread: float
    strong_residual: float
    rho_observed: float = Field(..., description="(1/2 − 1/θ)·(smallest observed Nehari norm)²")
    nehari_identity_gap: float
    lambda_threshold: Optional[float] = None
    below_threshold: bool = False
    converged_starts: int
    starts: List[StartSummary] = Field(default_factory=list)
    best: ReducedMinimization
    interval_checks: Optional[Dict[str, bool]] = None
    validation: Optional[ValidationReport] = None


def embedding_estimate(config: ProblemConfig) -> EmbeddingEstimate:
    if config.c_inf is not None:
        estimate = EmbeddingEstimate(c_inf_lower=config.c_inf, sample_count=1)
    else:
        estimate = estimate_c_inf(config.order, config.embedding_samples, config.embedding_seed)
    measure = config.weight.sublevel_measure_exact
    if measure is None:
        measure = config.weight.sublevel_measure()
    return estimate.complete(measure, config.weight.c)


def lambda_threshold(config: ProblemConfig) -> float:
    """Constructive part of Λ_*: 1/(c·C_∞²·meas{l<c})"""
    return embedding_estimate(config).lambda_threshold


def random_start(functional: EnergyFunctional, t_end: float, rng: np.random.Generator,
                 n_bumps: int = 3) -> np.ndarray:
    """Sum of positive Gaussian bumps centred in T"""
    t = functional.times
    x = np.zeros(functional.shape)
    for _ in range(n_bumps):
        center = rng.uniform(0.0, t_end)
        width = rng.uniform(0.05, 0.3) * t_end
        amplitude = rng.uniform(0.5, 1.5)
        direction = np.abs(rng.standard_normal(functional.n_components))
        direction /= np.linalg.norm(direction)
        x += amplitude * np.exp(-0.5 * ((t - center) / width) ** 2)[:, None] * direction[None, :]
    return x


def _random_starts(functional: EnergyFunctional, config: ProblemConfig):
    starts = []
    for k in range(config.starts):
        seed = config.seed + k
        starts.append((seed, random_start(functional, config.t_end, np.random.default_rng(seed))))
    return starts


def _certify(functional: EnergyFunctional, results: List[ReducedMinimization],
             config: ProblemConfig, problem: str):
    converged = [res for res in results if res.converged]
    if not converged:
        statuses = ", ".join(f"{res.seed}:{res.status}" for res in results)
        raise ConvergenceError(f"no start converged for the {problem} problem ({statuses})")
    best = converged[0]
    energies = [res.energy for res in converged]
    spread = max(energies) - min(energies)
    norms = [res.initial_norm for res in results] + [res.nehari.x_norm for res in converged]
    rho = (0.5 - 1.0 / config.potential.theta) * min(norms) ** 2
    summaries = [
        StartSummary(seed=res.seed, energy=res.energy, converged=res.converged, status=res.status,
                     iterations=res.iterations, gradient_norm=res.gradient_norm)
        for res in results
    ]
    x_best = functional.restrict(best.nehari.point)
    return best, spread, rho, summaries, x_best


def _check_strong_residual(functional: EnergyFunctional, u: GridFunction, config: ProblemConfig,
                           problem: str) -> float:
    residual = functional.strong_residual(u)
    limit = defaults.STRONG_RESIDUAL_FACTOR * config.optimizer.gradient_tol
    if not residual <= limit:
        raise ConvergenceError(
            f"strong residual {residual:.3e} of the {problem} ground state above {limit:.3e}"
        )
    return residual


def _validate(config: ProblemConfig, estimate: Optional[EmbeddingEstimate], plan: Optional[SamplePlan],
              potential_only: bool) -> ValidationReport:
    if potential_only:
        times = np.linspace(0.0, config.t_end, (plan or SamplePlan()).n_times)
        report = validate_potential(config.potential, config.n_components, times, plan)
    else:
        c_inf = estimate.c_inf_lower if estimate is not None else None
        report = validate_hypotheses(config.potential, config.weight, plan, c_inf)
    if not report.passed:
        names = ", ".join(check.name for check in report.failures)
        raise HypothesisError(f"hypotheses failed: {names}", report=report)
    return report


def solve_line(config: ProblemConfig,
               warm_starts: Sequence[GridFunction] = (),
               random_starts: bool = True,
               plan: Optional[SamplePlan] = None,
               max_workers: Optional[int] = None) -> GroundState:
    """
    Ground state of the truncated-line problem

    Args:
        config: Problem configuration
        warm_starts: Grid functions on the line grid used as extra starts
        random_starts: Whether to add config.starts random starts
        plan: Validation lattices
        max_workers: Thread count for the multistart fan-out

    Returns:
        GroundState
    """
    estimate = embedding_estimate(config)
    report = _validate(config, estimate, plan, potential_only=False)
    if not estimate.admissible:
        raise HypothesisError("C_inf^2 * meas{l<c} >= 1 for the configured weight", report=report)
    below = config.lam < estimate.lambda_threshold
    if below:
        logger.warning("lambda %.4g below the threshold %.4g", config.lam, estimate.lambda_threshold)

    disc = build_discretization(config)
    functional = EnergyFunctional(disc.grid, config.order, config.potential, disc.line_free,
                                  config.n_components, config.weight, config.lam)
    starts = [(-(k + 1), functional.restrict(u)) for k, u in enumerate(warm_starts)]
    if random_starts or not starts:
        starts += _random_starts(functional, config)
    results = multistart(functional, starts, config.optimizer, max_workers)
    best, spread, rho, summaries, x_best = _certify(functional, results, config, "line")

    u = best.nehari.point
    magnitude = u.magnitude
    start, stop = disc.line_free
    boundary = float(max(magnitude[start], magnitude[stop - 1]) / np.max(magnitude))
    if boundary > config.boundary_tolerance:
        raise ConvergenceError(
            f"boundary magnitude {boundary:.3e} above {config.boundary_tolerance:g}; increase truncation_R"
        )
    residual = _check_strong_residual(functional, u, config, "line")

    logger.info("line ground state at lambda=%g: energy %.12g, spread %.3e", config.lam, best.energy, spread)
    return GroundState(
        problem="line",
        lam=config.lam,
        u=u,
        energy=best.energy,
        gradient_norm=best.full_gradient_norm,
        nehari_residual=best.nehari.nehari_residual,
        x_norm=best.nehari.x_norm,
        boundary_magnitude=boundary,
        multistart_spread=spread,
        strong_residual=residual,
        rho_observed=rho,
        nehari_identity_gap=nehari_energy_identity(functional, x_best),
        lambda_threshold=estimate.lambda_threshold,
        below_threshold=below,
        converged_starts=sum(res.converged for res in results),
        starts=summaries,
        best=best,
        validation=report,
    )


def solve_bvp(config: ProblemConfig,
              plan: Optional[SamplePlan] = None,
              max_workers: Optional[int] = None) -> GroundState:
    """
    Ground state of the Dirichlet problem on [0, t_end]

    Solved on the line grid with free nodes restricted to the closed T and
    zero on every node outside it, so the energy is the whole-line energy of
    the zero extension and the node set is the one the line problem keeps
    free as λ grows. The result lives on the grid spanning exactly [0, t_end].
    """
    report = _validate(config, None, plan, potential_only=True)
    disc = build_discretization(config)
    functional = EnergyFunctional(disc.grid, config.order, config.potential, disc.bvp_free,
                                  config.n_components)
    results = multistart(functional, _random_starts(functional, config), config.optimizer, max_workers)
    best, spread, rho, summaries, x_best = _certify(functional, results, config, "bvp")

    line_u = best.nehari.point
    residual = _check_strong_residual(functional, line_u, config, "bvp")
    u = GridFunction(grid=disc.bvp_grid(), values=line_u.values[disc.t_start:disc.t_stop + 1])
    interval = check_interval_inequalities(u, config.order)
    if not interval.all_hold:
        logger.warning("interval inequalities fail for the Dirichlet ground state: %s", interval.checks)

    logger.info("Dirichlet ground state: energy %.12g, spread %.3e", best.energy, spread)
    return GroundState(
        problem="bvp",
        u=u,
        energy=best.energy,
        gradient_norm=best.full_gradient_norm,
        nehari_residual=best.nehari.nehari_residual,
        x_norm=best.nehari.x_norm,
        boundary_magnitude=0.0,
        multistart_spread=spread,
        strong_residual=residual,
        rho_observed=rho,
        nehari_identity_gap=nehari_energy_identity(functional, x_best),
        converged_starts=sum(res.converged for res in results),
        starts=summaries,
        best=best,
        interval_checks=interval.checks,
        validation=report,
    )


def line_functional(config: ProblemConfig, lam: Optional[float] = None) -> EnergyFunctional:
    disc = build_discretization(config)
    return EnergyFunctional(disc.grid, config.order, config.potential, disc.line_free,
                            config.n_components, config.weight, config.lam if lam is None else lam)


def strong_residual(u: GridFunction, config: ProblemConfig,
                    problem: Literal["line", "bvp"] = "line") -> float:
    """Dual norm of the discrete Euler-Lagrange residual at u"""
    disc = build_discretization(config)
    if problem == "bvp":
        functional = EnergyFunctional(disc.grid, config.order, config.potential, disc.bvp_free,
                                      config.n_components)
        if u.grid != disc.grid:
            u = zero_extend(u, disc.grid)
    else:
        functional = line_functional(config)
    return functional.strong_residual(u)


class MountainPassReport(BaseModel):
    delta: float
    rho: float
    beta: float
    min_energy: float
    samples: int
    holds: bool


def small_amplitude_radius(potential: PotentialSpec, eps: float, times: np.ndarray,
                           n_components: int, radii: Optional[np.ndarray] = None) -> float:
    """Largest sampled δ with W(t, u) ≤ eps·|u|² whenever |u| ≤ δ"""
    radii = np.geomspace(1e-8, 10.0, 161) if radii is None else radii
    direction = np.zeros((times.size, n_components))
    direction[:, 0] = 1.0
    delta = 0.0
    for r in radii:
        if np.any(potential.eval_W(times, r * direction) > eps * r ** 2):
            break
        delta = float(r)
    if delta == 0.0:
        raise HypothesisError(f"no radius with W <= {eps:g}|u|^2 found")
    return delta


def mountain_pass_check(config: ProblemConfig, n_samples: int = 32, seed: int = 0) -> MountainPassReport:
    """
    Sampled check of I ≥ β on the sphere of radius ρ

    ε = Θ/4, δ from the small-amplitude behaviour of W,
    ρ = δ/(C_∞(1+1/Θ)^{1/2}) and β = (1/2 − ε/Θ)ρ².
    """
    estimate = embedding_estimate(config)
    if estimate.theta_const is None:
        raise HypothesisError("no admissible theta constant for the configured weight")
    eps = estimate.theta_const / 4.0
    functional = line_functional(config)
    delta = small_amplitude_radius(config.potential, eps, functional.times, config.n_components)
    rho = delta / (estimate.c_inf_lower * np.sqrt(1.0 + 1.0 / estimate.theta_const))
    beta = (0.5 - eps / estimate.theta_const) * rho ** 2

    rng = np.random.default_rng(seed)
    energies = []
    for _ in range(n_samples):
        x = random_start(functional, config.t_end, rng)
        energies.append(functional.energy(rho * x / functional.norm(x)))
    min_energy = float(min(energies))
    return MountainPassReport(delta=delta, rho=float(rho), beta=float(beta), min_energy=min_energy,
                              samples=n_samples, holds=min_energy >= beta)
