"""
The damped mode

    W = Z2 + Linv22 ( sum_j A^j_{2,.}(V) dZ/dx_j - r_2(Z) ),

which equals -Linv22 Abar0_22 dZ2/dt along the linear flow.

Author: Hypocoax Team
"""

import logging
from typing import Optional

import numpy as np

from ..errors import SingularBlock
from ..lp.spectral_field import SpectralField
from ..systems.system_model import LinearizedSystem, SystemSpec, linearize

logger = logging.getLogger(__name__)

BLOCK_COND_LIMIT = 1e12


def block_inverse(lin: LinearizedSystem) -> np.ndarray:
    """Inverse of the dissipative block of L."""
    block = lin.L22
    cond = np.linalg.cond(block) if block.size else np.inf
    if not np.isfinite(cond) or cond > BLOCK_COND_LIMIT:
        raise SingularBlock(f"Dissipative block of L is singular (condition number {cond:.3e})")
    return np.linalg.inv(block)


def linear_damped_mode(Z: SpectralField, lin: LinearizedSystem) -> SpectralField:
    """Fourier form W = Z2 + Linv22 sum_j i xi_j Abar^j_{2,.} Z."""
    inverse = block_inverse(lin)
    grid = Z.grid
    flux = np.zeros((lin.n2,) + Z.resolution, dtype=complex)
    for j in range(lin.d):
        flux += 1j * grid.xi[j] * np.einsum("ab,b...->a...", lin.Abar[j + 1][lin.n1:], Z.coeffs)
    W = Z.coeffs[lin.n1:] + np.einsum("ab,b...->a...", inverse, flux)
    return SpectralField(W, Z.box_length)


def damped_mode(Z: SpectralField, system: SystemSpec,
                lin: Optional[LinearizedSystem] = None) -> SpectralField:
    """Quasilinear damped mode; products are formed on the dealiased state."""
    lin = linearize(system) if lin is None else lin
    if system.damped_mode_hook is not None:
        return system.damped_mode_hook(Z, system)
    if system.linear:
        return linear_damped_mode(Z, lin)

    inverse = block_inverse(lin)
    grid = Z.grid
    n, n1 = system.n, system.n1
    coeffs = grid.dealias(Z.coeffs)
    perturbation = grid.to_physical(coeffs).reshape(n, -1).T
    states = perturbation + system.equilibrium
    S = system.symmetrizer_at(states)

    flux = np.zeros((len(states), n - n1))
    for j in range(system.d):
        Aj = S @ system.coeff_at(j + 1, states)
        dZ = grid.to_physical(grid.derivative(coeffs, j)).reshape(n, -1).T
        flux += np.einsum("pab,pb->pa", Aj[:, n1:, :], dZ)
    remainder = system.residual(perturbation, lin.L)[:, n1:]

    rhs = grid.dealias(grid.to_spectral((flux - remainder).T.reshape((n - n1,) + Z.resolution)))
    W = Z.coeffs[n1:] + np.einsum("ab,b...->a...", inverse, rhs)
    return SpectralField(W, Z.box_length)
