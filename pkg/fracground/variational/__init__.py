"""Energy functional, Nehari manifold and ground-state solvers."""
