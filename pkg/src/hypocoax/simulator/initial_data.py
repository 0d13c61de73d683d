"""
Initial perturbations for runs: Gaussian bumps, random dyadic-band data,
single Fourier modes and LPF1 files. Every generated field is real
(Hermitian coefficients).

Author: Hypocoax Team
"""

import logging
from typing import Optional

import numpy as np

from ..errors import DimensionMismatch, UnresolvedBand
from ..lp.field_io import read_lpf1
from ..lp.littlewood_paley import hybrid_threshold_norms
from ..lp.spectral_field import SpectralField, spectral_grid
from ..systems.system_model import SystemSpec
from .run_config import InitialDatum, RunConfig

logger = logging.getLogger(__name__)


def _components(datum: InitialDatum, n: int):
    selected = list(range(n)) if datum.components is None else list(datum.components)
    if any(not 0 <= c < n for c in selected):
        raise DimensionMismatch(f"Component selection {selected} out of range for n={n}")
    return selected


def gaussian_bump(datum: InitialDatum, n: int, resolution, box_length) -> SpectralField:
    grid = spectral_grid(tuple(resolution), tuple(box_length))
    x = grid.coordinates()
    center = np.asarray(box_length).reshape((grid.d,) + (1,) * grid.d) / 2.0
    bump = datum.amplitude * np.exp(-np.sum((x - center) ** 2, axis=0) / (2.0 * datum.width ** 2))

    values = np.zeros((n,) + grid.resolution)
    for c in _components(datum, n):
        values[c] = bump
    coeffs = grid.enforce_hermitian(grid.dealias(grid.to_spectral(values)))
    return SpectralField(coeffs, grid.box_length)


def random_band(datum: InitialDatum, n: int, resolution, box_length, seed: int) -> SpectralField:
    """Gaussian random coefficients on 2^q_a <= |xi| < 2^(q_b + 1), normalized in L2."""
    grid = spectral_grid(tuple(resolution), tuple(box_length))
    rng = np.random.default_rng(seed)
    q_a, q_b = datum.band
    mask = (grid.magnitude >= 2.0 ** q_a) & (grid.magnitude < 2.0 ** (q_b + 1)) & grid.dealias_mask
    if not np.any(mask):
        raise UnresolvedBand(f"No resolved mode in the dyadic band [{q_a}, {q_b}]")

    coeffs = np.zeros((n,) + grid.resolution, dtype=complex)
    for c in _components(datum, n):
        noise = rng.standard_normal(grid.resolution) + 1j * rng.standard_normal(grid.resolution)
        coeffs[c] = noise * mask
    coeffs = grid.enforce_hermitian(coeffs)
    coeffs[(slice(None),) + (0,) * grid.d] = 0.0

    field = SpectralField(coeffs, grid.box_length)
    norm = field.l2_norm()
    return field * (datum.amplitude / norm) if norm > 0 else field


def single_mode(datum: InitialDatum, n: int, resolution, box_length) -> SpectralField:
    """amplitude * cos(k . x) on the selected components."""
    grid = spectral_grid(tuple(resolution), tuple(box_length))
    k = np.zeros(grid.d, dtype=int) if datum.mode is None else np.asarray(datum.mode, dtype=int)
    if k.shape != (grid.d,):
        raise DimensionMismatch(f"Mode {datum.mode} does not match d={grid.d}")
    plus = tuple(int(v) % size for v, size in zip(k, grid.resolution))
    minus = tuple(int(-v) % size for v, size in zip(k, grid.resolution))

    coeffs = np.zeros((n,) + grid.resolution, dtype=complex)
    for c in _components(datum, n):
        if plus == minus:
            coeffs[(c,) + plus] = datum.amplitude
        else:
            coeffs[(c,) + plus] = datum.amplitude / 2.0
            coeffs[(c,) + minus] = datum.amplitude / 2.0
    return SpectralField(coeffs, grid.box_length)


def make_initial_datum(config: RunConfig, system: SystemSpec,
                       seed: Optional[int] = None) -> SpectralField:
    datum = config.initial
    d = config.d or system.d
    if d != system.d:
        raise DimensionMismatch(f"Run dimension {d} differs from system dimension {system.d}")
    resolution = (config.resolution,) * d
    box = (config.box_length,) * d
    seed = datum.seed if datum.seed is not None else (config.seed if seed is None else seed)

    if datum.kind == "gaussian":
        field = gaussian_bump(datum, system.n, resolution, box)
    elif datum.kind == "random-band":
        field = random_band(datum, system.n, resolution, box, seed)
    elif datum.kind == "single-mode":
        field = single_mode(datum, system.n, resolution, box)
    else:
        field = read_lpf1(datum.path)
        if field.n_components != system.n or field.d != d:
            raise DimensionMismatch(
                f"Field file has {field.n_components} components in d={field.d}, "
                f"expected {system.n} in d={d}"
            )

    low, high = hybrid_threshold_norms(field, d / 2.0 - 1.0, d / 2.0 + 1.0)
    logger.info(f"Initial datum {datum.kind}: hybrid norm {low + high:.4e} (low {low:.3e}, high {high:.3e})")
    return field


def measured_size(field: SpectralField, refined: bool = False) -> float:
    """Hybrid smallness norm of a datum: low d/2-1 (d/2 when refined) plus high d/2+1."""
    half = field.d / 2.0
    low, high = hybrid_threshold_norms(field, half if refined else half - 1.0, half + 1.0)
    return low + high
