"""Trajectory recording, decay fits, theory exponents and reports."""
