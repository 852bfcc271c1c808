"""
Test script to verify fracground solver functionality
"""

from fracground.hypotheses.potentials import builtin_potential, builtin_weight
from fracground.operators.fracops import FracOrder, convergence_study
from fracground.variational.solver import ProblemConfig, lambda_threshold, solve_bvp, solve_line


def test_ground_state():
    # Coarse version of the reference problem
    config = ProblemConfig(
        order=FracOrder(alpha=0.75),
        lam=100.0,
        truncation_R=4.0,
        t_end=1.0,
        n_nodes=513,
        potential=builtin_potential(theta=3.0, epsilon=1.0),
        weight=builtin_weight(n=1, c=1.0, l_max=100.0, j_lo=-0.25, j_hi=1.25, t_end=1.0, ramp=0.1),
        starts=4,
    )

    # Operator consistency
    table = convergence_study(config.order, exponent=2.0, node_counts=(257, 513, 1025))
    print("Power-rule convergence:")
    print(table.to_string(index=False))

    print(f"\nLambda threshold: {lambda_threshold(config):.4f}")

    # Dirichlet problem on T
    bvp = solve_bvp(config)
    print(f"Dirichlet energy: {bvp.energy:.10f}")
    print(f"Dirichlet gradient norm: {bvp.gradient_norm:.3e}")
    print(f"Interval inequalities: {bvp.interval_checks}")

    # Truncated line at lambda = 100
    line = solve_line(config)
    print(f"Line energy: {line.energy:.10f}")
    print(f"Boundary magnitude: {line.boundary_magnitude:.3e}")
    print(f"Multistart spread: {line.multistart_spread:.3e}")

    return bvp, line


if __name__ == "__main__":
    test_ground_state()
