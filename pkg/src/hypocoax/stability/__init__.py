"""Shizuta-Kawashima analysis, schedules and hypocoercivity certification."""
