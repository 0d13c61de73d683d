"""Littlewood-Paley blocks, Besov semi-norms and spectral fields."""

from .field_io import lpf1_bytes, read_lpf1, read_lpf1_bytes, write_lpf1
from .littlewood_paley import (
    BesovQuery,
    BesovReport,
    besov_norm,
    besov_report,
    block_norms,
    chi,
    dyadic_block,
    dyadic_multiplier,
    hybrid_threshold_norms,
    lp_range,
    partition_sum,
    phi,
)
from .spectral_field import SpectralField, SpectralGrid, is_power_of_two, spectral_grid

__all__ = [
    "BesovQuery", "BesovReport", "SpectralField", "SpectralGrid",
    "besov_norm", "besov_report", "block_norms", "chi", "dyadic_block",
    "dyadic_multiplier", "hybrid_threshold_norms", "is_power_of_two",
    "lp_range", "lpf1_bytes", "partition_sum", "phi", "read_lpf1",
    "read_lpf1_bytes", "spectral_grid", "write_lpf1",
]
