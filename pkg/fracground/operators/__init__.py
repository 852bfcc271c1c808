"""Fractional derivative operators and function-space norms."""
