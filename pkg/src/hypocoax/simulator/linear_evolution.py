"""
Exact evolution of constant-coefficient systems, mode by mode:

    Z_hat(xi, t) = exp(-t (i sum_j xi_j M_j + N)) Z_hat(xi, 0)

Propagators are computed once per distinct time increment with scipy's
scaling-and-squaring expm and reused along uniform output grids.

Author: Hypocoax Team
"""

import logging
from typing import Dict, List, Sequence

import numpy as np
import scipy.linalg

from ..lp.spectral_field import SpectralField, SpectralGrid
from ..systems.system_model import LinearizedSystem

logger = logging.getLogger(__name__)


def increment_key(delta: float) -> float:
    return float(f"{delta:.12g}")


def mode_generators(lin: LinearizedSystem, grid: SpectralGrid) -> np.ndarray:
    """i xi.M + N for every grid mode, shape (P, n, n) in flattened FFT order."""
    xi = grid.xi.reshape(grid.d, -1).T
    return 1j * np.einsum("pj,jab->pab", xi, lin.M_axes) + lin.N


def _check_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("Need a non-empty sequence of output times")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("Output times must be non-negative and nondecreasing")
    return times


def linear_exact_evolve(lin: LinearizedSystem, Z0: SpectralField,
                        times: Sequence[float]) -> List[SpectralField]:
    times = _check_times(times)
    grid = Z0.grid
    if Z0.n_components != lin.n or grid.d != lin.d:
        raise ValueError(
            f"Field with {Z0.n_components} components in d={grid.d} does not match system n={lin.n}, d={lin.d}"
        )

    generators = mode_generators(lin, grid)
    propagators: Dict[float, np.ndarray] = {}
    state = Z0.coeffs.reshape(lin.n, -1).T.copy()
    out = []
    previous = 0.0
    for t in times:
        delta = float(t - previous)
        if delta > 0:
            key = increment_key(delta)
            if key not in propagators:
                propagators[key] = scipy.linalg.expm(-delta * generators)
            state = np.einsum("pab,pb->pa", propagators[key], state)
        previous = float(t)
        coeffs = grid.enforce_hermitian(state.T.reshape(Z0.coeffs.shape))
        out.append(Z0.with_coeffs(coeffs))

    logger.info(f"Exact evolution: {len(times)} outputs, {len(propagators)} distinct propagators")
    return out
