"""
Shared fixtures

The small problem keeps the reference physics (alpha = 0.75, theta = 3,
epsilon = 1, T = [0, 1]) on a coarser grid with fewer starts.
"""

import pytest

from fracground.hypotheses.potentials import builtin_potential, builtin_weight
from fracground.operators.fracops import FracOrder
from fracground.variational.solver import ProblemConfig, build_discretization


@pytest.fixture(scope="session")
def order():
    return FracOrder(alpha=0.75)


@pytest.fixture(scope="session")
def potential():
    return builtin_potential(theta=3.0, epsilon=1.0)


@pytest.fixture(scope="session")
def weight():
    return builtin_weight(n=1, c=1.0, l_max=100.0, j_lo=-0.25, j_hi=1.25, t_end=1.0, ramp=0.1)


@pytest.fixture(scope="session")
def small_config(order, potential, weight):
    return ProblemConfig(
        order=order,
        lam=100.0,
        truncation_R=4.0,
        t_end=1.0,
        n_nodes=513,
        potential=potential,
        weight=weight,
        starts=4,
        seed=0,
    )


@pytest.fixture(scope="session")
def small_disc(small_config):
    return build_discretization(small_config)
