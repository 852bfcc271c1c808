"""
Nehari Manifold

The discrete energy functional, its Sobolev gradient, the fibering map,
the Nehari projection and sphere-constrained minimization of the reduced
functional.

Vectors on the free nodes are arrays of shape (m, n); flattened vectors use
node-major ordering, index = i·n + component.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq

from ..config.settings import defaults
from ..exceptions import ConvergenceError, FiberingError
from ..hypotheses.potentials import PotentialSpec, WeightSpec
from ..operators.fracops import FracOrder, Grid1D, GridFunction, StiffnessForm

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class OptimizerOptions(BaseModel):
    """Armijo gradient descent on the unit sphere"""
    model_config = ConfigDict(extra="forbid")

    gradient_tol: float = Field(1e-6, gt=0.0, description="Stopping tolerance relative to the initial gradient")
    max_iterations: int = Field(10000, ge=1)
    initial_step: float = Field(1.0, gt=0.0, description="First trial step, in units of the gradient length")
    shrink: float = Field(0.5, gt=0.0, lt=1.0, description="Backtracking factor")
    armijo: float = Field(1e-4, gt=0.0, lt=1.0, description="Sufficient-decrease slope factor")
    optimism: float = Field(2.0, ge=1.0, description="Growth of the next initial step over the last decrease")
    max_backtracks: int = Field(60, ge=1)
    fibering_rtol: float = Field(1e-10, gt=0.0, description="|h'(σ)| tolerance relative to ‖u‖²")


class FiberingResult(BaseModel):
    sigma: float = Field(..., gt=0.0, description="Ray maximizer σ_u")
    value: float = Field(..., description="h(σ_u) = I(σ_u u)")
    derivative_residual: float = Field(..., ge=0.0, description="|h'(σ_u)|")
    bracket: Tuple[float, float]
    iterations: int


class NehariPoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: GridFunction = Field(..., description="m(u) = σ_u·u/‖u‖")
    energy: float
    nehari_residual: float = Field(..., ge=0.0, description="|⟨I'(point), point⟩|")
    sigma: float = Field(..., gt=0.0, description="Fibering maximizer of the normalised direction")
    x_norm: float = Field(..., gt=0.0, description="‖point‖ in X^{α,λ}")


class IterationRecord(BaseModel):
    iteration: int
    phi: float
    gradient_norm: float
    step: float


class ReducedMinimization(BaseModel):
    """Outcome of one descent run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    nehari: NehariPoint
    direction: np.ndarray = Field(..., description="Final unit-sphere direction on the free nodes")
    converged: bool
    status: str
    iterations: int
    gradient_norm: float = Field(..., description="‖g_Φ‖ at the final direction")
    full_gradient_norm: float = Field(..., description="‖I'(m(w))‖ in X^{α,λ}")
    tolerance: float
    initial_norm: float = Field(..., description="‖m(w₀)‖ of the starting projection")
    log: List[IterationRecord] = Field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.nehari.energy


class EnergyFunctional:
    """
    Discrete I(u) = ½uᵀGu − Σ q_i W(t_i, u_i) on a contiguous range of free nodes

    G = A_FF ⊗ I_n + λ·diag(q_i L(t_i)); nodes outside the range are zero.
    """

    def __init__(self,
                 grid: Grid1D,
                 order: FracOrder,
                 potential: PotentialSpec,
                 free: Tuple[int, int],
                 n_components: int = 1,
                 weight: Optional[WeightSpec] = None,
                 lam: float = 0.0):
        start, stop = free
        if not 0 <= start < stop <= grid.n_nodes:
            raise ValueError(f"free range {free} outside a grid of {grid.n_nodes} nodes")
        if lam < 0.0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        if lam > 0.0 and weight is None:
            raise ValueError("a weight is required when lambda > 0")
        if weight is not None and weight.n_components != n_components:
            raise ValueError("weight dimension does not match n_components")

        self.grid = grid
        self.order = order
        self.potential = potential
        self.weight = weight
        self.lam = lam
        self.free = (start, stop)
        self.n_components = n_components
        self.form = StiffnessForm(order, grid)
        self.times = grid.nodes[start:stop]
        self.q = grid.quadrature_weights()[start:stop]
        self.shape = (stop - start, n_components)

        m, n = self.shape
        gram = np.kron(self.form.block(start, stop), np.eye(n))
        if lam > 0.0:
            self.L = weight.eval_L(self.times)
            blocks = gram.reshape(m, n, m, n)
            idx = np.arange(m)
            blocks[idx, :, idx, :] += lam * self.q[:, None, None] * self.L
        else:
            self.L = np.zeros((m, n, n))
        self.gram = gram

    @cached_property
    def _cholesky(self):
        try:
            return cho_factor(self.gram, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise ConvergenceError("Gram matrix is not positive definite; check the grid") from exc

    def embed(self, x: np.ndarray) -> GridFunction:
        values = np.zeros((self.grid.n_nodes, self.n_components))
        values[self.free[0]:self.free[1]] = np.reshape(x, self.shape)
        return GridFunction(grid=self.grid, values=values)

    def restrict(self, u: GridFunction) -> np.ndarray:
        if u.grid != self.grid or u.n_components != self.n_components:
            raise ValueError("grid function does not live on this functional's grid")
        start, stop = self.free
        outside = np.concatenate([u.values[:start], u.values[stop:]])
        if np.any(outside != 0.0):
            raise ValueError("grid function does not vanish outside the free nodes")
        return u.values[start:stop].copy()

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.ravel(x) @ (self.gram @ np.ravel(y)))

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def potential_integral(self, x: np.ndarray) -> float:
        return float(np.sum(self.q * self.potential.eval_W(self.times, np.reshape(x, self.shape))))

    def energy(self, x: np.ndarray) -> float:
        return 0.5 * self.inner(x, x) - self.potential_integral(x)

    def dual_gradient(self, x: np.ndarray) -> np.ndarray:
        """r with r·v = I'(x)v"""
        x = np.reshape(x, self.shape)
        force = self.q[:, None] * self.potential.eval_gradW(self.times, x)
        return (self.gram @ x.ravel()).reshape(self.shape) - force

    def riesz(self, r: np.ndarray) -> np.ndarray:
        return cho_solve(self._cholesky, np.ravel(r), check_finite=False).reshape(self.shape)

    def energy_gradient(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Sobolev gradient of I

        Returns:
            (g, r) with ⟨g, v⟩_G = I'(x)v and r the dual vector
        """
        r = self.dual_gradient(x)
        return self.riesz(r), r

    def ray_derivative(self, x: np.ndarray, sigma: float, norm_sq: Optional[float] = None) -> float:
        """h'(σ) = σ‖x‖² − Σ q (∇W(t, σx), x)"""
        x = np.reshape(x, self.shape)
        norm_sq = self.inner(x, x) if norm_sq is None else norm_sq
        grad = self.potential.eval_gradW(self.times, sigma * x)
        return sigma * norm_sq - float(np.sum(self.q[:, None] * grad * x))

    def ray_value(self, x: np.ndarray, sigma: float, norm_sq: Optional[float] = None) -> float:
        norm_sq = self.inner(x, x) if norm_sq is None else norm_sq
        return 0.5 * sigma ** 2 * norm_sq - self.potential_integral(sigma * np.reshape(x, self.shape))

    def strong_residual(self, u: GridFunction) -> float:
        """
        Dual norm of the Euler-Lagrange residual, with the stiffness applied
        through the FFT route on the whole grid
        """
        x = self.restrict(u)
        start, stop = self.free
        stiff = self.form.apply(u.values)[start:stop]
        weighted = self.lam * self.q[:, None] * np.einsum('ijk,ik->ij', self.L, x)
        force = self.q[:, None] * self.potential.eval_gradW(self.times, x)
        r = stiff + weighted - force
        return float(np.sqrt(max(float(np.ravel(r) @ np.ravel(self.riesz(r))), 0.0)))


def fibering_sigma(functional: EnergyFunctional, x: np.ndarray,
                   tol: Optional[float] = None, rtol: float = 1e-10) -> FiberingResult:
    """
    Unique positive root of h'(σ) along the ray through x

    Args:
        functional: Discrete energy
        x: Nonzero direction on the free nodes
        tol: Absolute tolerance on |h'(σ)|, defaults to rtol·‖x‖²
        rtol: Relative tolerance used when tol is not given

    Returns:
        FiberingResult
    """
    norm_sq = functional.inner(x, x)
    if not np.isfinite(norm_sq) or norm_sq <= 0.0:
        raise ValueError("fibering direction must be nonzero")
    tol = rtol * norm_sq if tol is None else tol

    def derivative(sigma: float) -> float:
        return functional.ray_derivative(x, sigma, norm_sq)

    limit = defaults.FIBERING_MAX_EXPANSIONS
    lo = hi = 1.0 / np.sqrt(norm_sq)
    expansions = 0
    while derivative(lo) <= 0.0:
        lo *= 0.5
        expansions += 1
        if expansions > limit:
            raise FiberingError(f"h' not positive near 0 after {limit} halvings")
    while derivative(hi) >= 0.0:
        hi *= 2.0
        expansions += 1
        if expansions > limit:
            raise FiberingError(f"h' not negative for large sigma after {limit} doublings")

    sigma, info = brentq(derivative, lo, hi, xtol=1e-300, rtol=4.0 * _EPS,
                         maxiter=500, full_output=True)
    residual = abs(derivative(sigma))
    if residual > tol:
        raise FiberingError(f"|h'(sigma)| = {residual:.3e} above tolerance {tol:.3e}")

    value = functional.ray_value(x, sigma, norm_sq)
    for trial in (0.5 * sigma, 2.0 * sigma):
        if functional.ray_value(x, trial, norm_sq) > value + 1e-12 * max(1.0, abs(value)):
            raise FiberingError(f"sigma={sigma:.6g} is not a maximizer of the fibering map")

    return FiberingResult(
        sigma=float(sigma),
        value=float(value),
        derivative_residual=float(residual),
        bracket=(float(lo), float(hi)),
        iterations=expansions + info.iterations,
    )


def nehari_project(functional: EnergyFunctional, x: np.ndarray, rtol: float = 1e-10) -> NehariPoint:
    """m(x) = σ_w·w with w = x/‖x‖"""
    norm = functional.norm(x)
    if norm <= 0.0:
        raise ValueError("cannot project the zero function")
    w = np.reshape(x, functional.shape) / norm
    fib = fibering_sigma(functional, w, rtol=rtol)
    point = fib.sigma * w
    residual = fib.sigma * fib.derivative_residual
    return NehariPoint(
        point=functional.embed(point),
        energy=fib.value,
        nehari_residual=residual,
        sigma=fib.sigma,
        x_norm=functional.norm(point),
    )


def nehari_energy_identity(functional: EnergyFunctional, x: np.ndarray) -> float:
    """|I(x) − Σq(½(∇W, x) − W)|, zero on the Nehari manifold"""
    x = np.reshape(x, functional.shape)
    grad = functional.potential.eval_gradW(functional.times, x)
    W = functional.potential.eval_W(functional.times, x)
    mean_value = float(np.sum(functional.q * (0.5 * np.einsum('ij,ij->i', grad, x) - W)))
    return abs(functional.energy(x) - mean_value)


def minimize_reduced(functional: EnergyFunctional,
                     start: np.ndarray,
                     options: Optional[OptimizerOptions] = None,
                     seed: int = 0) -> ReducedMinimization:
    """
    Riemannian gradient descent of Φ(w) = I(m(w)) on the unit sphere of G

    Args:
        functional: Discrete energy
        start: Nonzero starting function on the free nodes
        options: Optimizer options
        seed: Label carried into the result

    Returns:
        ReducedMinimization; a failed line search is reported as unconverged
    """
    opts = options or OptimizerOptions()
    norm = functional.norm(start)
    if norm <= 0.0:
        raise ValueError("start must be nonzero")
    w = np.reshape(start, functional.shape) / norm

    def evaluate(direction: np.ndarray):
        fib = fibering_sigma(functional, direction, rtol=opts.fibering_rtol)
        g, r = functional.energy_gradient(fib.sigma * direction)
        radial = float(np.sum(r * direction))
        tangent = g - radial * direction
        full_sq = max(float(np.sum(r * g)), 0.0)
        tangent_sq = max(full_sq - radial ** 2, 0.0)
        return fib, fib.sigma * tangent, fib.sigma * np.sqrt(tangent_sq), np.sqrt(full_sq)

    fib, grad_phi, grad_norm, full_norm = evaluate(w)
    initial_norm = fib.sigma
    # Relative to the initial gradient; a start already below gradient_tol keeps the absolute level.
    tolerance = opts.gradient_tol * min(1.0, grad_norm) if grad_norm > opts.gradient_tol else opts.gradient_tol
    log = [IterationRecord(iteration=0, phi=fib.value, gradient_norm=grad_norm, step=0.0)]
    status = "max_iterations"
    step_guess = opts.initial_step / max(grad_norm, 1e-300)
    previous_phi = None

    for iteration in range(1, opts.max_iterations + 1):
        if grad_norm <= tolerance and full_norm <= opts.gradient_tol:
            status = "converged"
            break

        phi = fib.value
        slope = -grad_norm ** 2
        if previous_phi is not None:
            guess = opts.optimism * 2.0 * (phi - previous_phi) / slope
            step_guess = guess if np.isfinite(guess) and guess > 0.0 else opts.initial_step / grad_norm
        step = step_guess
        slack = 4.0 * _EPS * max(1.0, abs(phi))

        accepted = None
        for _ in range(opts.max_backtracks):
            trial = w - step * grad_phi
            trial /= functional.norm(trial)
            trial_fib = fibering_sigma(functional, trial, rtol=opts.fibering_rtol)
            if trial_fib.value <= phi + opts.armijo * step * slope + slack:
                accepted = trial
                break
            step *= opts.shrink

        if accepted is None:
            status = "line_search_failed"
            logger.warning("seed %d: line search failed at iteration %d (|g|=%.3e)", seed, iteration, grad_norm)
            break

        previous_phi = phi
        w = accepted
        fib, grad_phi, grad_norm, full_norm = evaluate(w)
        log.append(IterationRecord(iteration=iteration, phi=fib.value, gradient_norm=grad_norm, step=step))
        logger.debug("seed %d it %d phi=%.12g |g|=%.3e step=%.3e", seed, iteration, fib.value, grad_norm, step)
    else:
        if grad_norm <= tolerance and full_norm <= opts.gradient_tol:
            status = "converged"

    point = fib.sigma * w
    nehari = NehariPoint(
        point=functional.embed(point),
        energy=fib.value,
        nehari_residual=fib.sigma * fib.derivative_residual,
        sigma=fib.sigma,
        x_norm=functional.norm(point),
    )
    return ReducedMinimization(
        seed=seed,
        nehari=nehari,
        direction=w,
        converged=status == "converged",
        status=status,
        iterations=len(log) - 1,
        gradient_norm=float(grad_norm),
        full_gradient_norm=float(full_norm),
        tolerance=float(tolerance),
        initial_norm=float(initial_norm),
        log=log,
    )


def multistart(functional: EnergyFunctional,
               starts: Sequence[Tuple[int, np.ndarray]],
               options: Optional[OptimizerOptions] = None,
               max_workers: Optional[int] = None) -> List[ReducedMinimization]:
    """
    Independent descents merged by (converged first, energy, seed)

    Args:
        functional: Discrete energy, shared read-only between workers
        starts: (seed, start) pairs
        options: Optimizer options
        max_workers: Thread count, defaults to NumericalDefaults.MAX_WORKERS

    Returns:
        Results, best first
    """
    workers = max_workers or defaults.MAX_WORKERS
    functional._cholesky  # factor once before fan-out

    def run(item: Tuple[int, np.ndarray]) -> ReducedMinimization:
        seed, start = item
        result = minimize_reduced(functional, start, options, seed)
        logger.info("start %d: %s after %d iterations, energy %.12g", seed, result.status,
                    result.iterations, result.energy)
        return result

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(run, starts))
    return sorted(results, key=lambda res: (not res.converged, res.energy, res.seed))


class NehariSample(BaseModel):
    """Observed counterparts of the Nehari constants over sampled directions"""
    directions: int
    min_norm: float = Field(..., description="Smallest ‖m(u)‖ observed")
    max_sigma: float = Field(..., description="Largest σ_u over unit directions")
    min_energy: float = Field(..., description="Smallest I(m(u)) observed")
    energy_lower_bound: float = Field(..., description="(1/2 − 1/θ)·min_norm²")


def sample_nehari_constants(functional: EnergyFunctional,
                            start_factory: Callable[[np.random.Generator], np.ndarray],
                            n_directions: int = 32,
                            seed: int = 0) -> NehariSample:
    rng = np.random.default_rng(seed)
    points = [nehari_project(functional, start_factory(rng)) for _ in range(n_directions)]
    min_norm = min(p.x_norm for p in points)
    theta = functional.potential.theta
    return NehariSample(
        directions=n_directions,
        min_norm=min_norm,
        max_sigma=max(p.sigma for p in points),
        min_energy=min(p.energy for p in points),
        energy_lower_bound=(0.5 - 1.0 / theta) * min_norm ** 2,
    )
