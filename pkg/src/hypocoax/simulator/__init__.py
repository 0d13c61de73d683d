"""Exact, oracle and pseudospectral evolution."""
