"""Frequency-localized Lyapunov functionals and the damped mode."""
