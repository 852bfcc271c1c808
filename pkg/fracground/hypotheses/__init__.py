"""Potential and weight families with hypothesis validators."""
