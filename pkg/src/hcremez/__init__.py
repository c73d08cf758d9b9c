"""Remez and Nikol'skii inequalities for hyperbolic cross trigonometric polynomials."""
