"""
Damped compressible Euler in the (n, u) variables.

    dn/dt + u.grad n + (1 + G(n)) div u = 0
    du/dt + u.grad u + grad n + lam u = 0

with pressure P(rho) = rho^gamma / gamma, n(rho) = (rho^(gamma-1) - 1)/(gamma - 1)
(log rho when gamma = 1) and G(n) = (gamma - 1) n, so that G(n(rho)) = P'(rho) - 1.

Author: Hypocoax Team
"""

import logging
import math
from functools import partial

import numpy as np

from ..errors import InvalidGamma
from ..lp.spectral_field import SpectralField, SpectralGrid
from ..systems.system_model import SystemSpec

logger = logging.getLogger(__name__)


def _check_gamma(gamma: float):
    if gamma < 1.0:
        raise InvalidGamma(f"Adiabatic exponent must be >= 1, got {gamma}")


def pressure(rho, gamma: float):
    _check_gamma(gamma)
    return np.asarray(rho, dtype=float) ** gamma / gamma


def enthalpy_variable(rho, gamma: float):
    """rho -> n."""
    _check_gamma(gamma)
    rho = np.asarray(rho, dtype=float)
    if gamma == 1.0:
        return np.log(rho)
    return (rho ** (gamma - 1.0) - 1.0) / (gamma - 1.0)


def density_from_n(n, gamma: float):
    _check_gamma(gamma)
    n = np.asarray(n, dtype=float)
    if gamma == 1.0:
        return np.exp(n)
    return (1.0 + (gamma - 1.0) * n) ** (1.0 / (gamma - 1.0))


def g_function(n, gamma: float):
    return (gamma - 1.0) * np.asarray(n, dtype=float)


def euler_mass(field: SpectralField, gamma: float) -> float:
    """Integral of rho - 1 over the box."""
    n = field.to_physical()[0]
    return float(np.mean(density_from_n(n, gamma) - 1.0) * field.volume)


def euler_rhs(Z: np.ndarray, grid: SpectralGrid, system: SystemSpec) -> np.ndarray:
    """Time derivative of the spectral state (n, u), quadratic terms dealiased."""
    gamma, lam = system.parameters["gamma"], system.parameters["lambda"]
    d = grid.d
    Z = grid.dealias(Z)
    n_hat, u_hat = Z[0], Z[1:]

    grad_n_hat = np.stack([grid.derivative(n_hat, j) for j in range(d)])
    div_u_hat = sum(grid.derivative(u_hat[j], j) for j in range(d))

    n = grid.to_physical(n_hat)
    u = grid.to_physical(u_hat)
    grad_n = grid.to_physical(grad_n_hat)
    div_u = grid.to_physical(div_u_hat)

    mass_flux = np.sum(u * grad_n, axis=0) + g_function(n, gamma) * div_u
    advection = np.stack([
        sum(u[j] * grid.to_physical(grid.derivative(u_hat[i], j)) for j in range(d))
        for i in range(d)
    ])

    out = np.empty_like(Z)
    out[0] = -div_u_hat - grid.dealias(grid.to_spectral(mass_flux))
    out[1:] = -grad_n_hat - lam * u_hat - grid.dealias(grid.to_spectral(advection))
    return out


def euler_damped_mode(field: SpectralField, system: SystemSpec) -> SpectralField:
    """W = u + (grad n + u.grad u) / lam."""
    lam = system.parameters["lambda"]
    grid = field.grid
    d = grid.d
    Z = grid.dealias(field.coeffs)
    n_hat, u_hat = Z[0], Z[1:]

    u = grid.to_physical(u_hat)
    advection = np.stack([
        sum(u[j] * grid.to_physical(grid.derivative(u_hat[i], j)) for j in range(d))
        for i in range(d)
    ])
    grad_n_hat = np.stack([grid.derivative(n_hat, j) for j in range(d)])
    W = field.coeffs[1:] + (grad_n_hat + grid.dealias(grid.to_spectral(advection))) / lam
    return SpectralField(W, field.box_length)


def make_euler_system(d: int, gamma: float = 2.0, lam: float = 1.0) -> SystemSpec:
    """Built-in damped Euler system around (n, u) = 0."""
    _check_gamma(gamma)
    if lam <= 0:
        raise ValueError(f"Damping strength must be positive, got {lam}")
    if d < 1:
        raise ValueError(f"Spatial dimension must be >= 1, got {d}")
    n = d + 1

    def coeff_batch(j, states):
        states = np.atleast_2d(states)
        out = np.zeros((len(states), n, n))
        if j == 0:
            out[:] = np.eye(n)
            return out
        out += states[:, j, None, None] * np.eye(n)
        out[:, 0, j] += 1.0 + g_function(states[:, 0], gamma)
        out[:, j, 0] += 1.0
        return out

    def source_batch(states):
        states = np.atleast_2d(states)
        out = np.zeros_like(states, dtype=float)
        out[:, 1:] = -lam * states[:, 1:]
        return out

    def symmetrizer_batch(states):
        states = np.atleast_2d(states)
        out = np.zeros((len(states), n, n))
        out[:] = np.eye(n)
        out[:, 0, 0] = 1.0 / (1.0 + g_function(states[:, 0], gamma))
        return out

    jacobian = np.diag([0.0] + [-lam] * d)
    system = SystemSpec(
        name=f"euler-damped-{d}d",
        d=d, n=n, n1=1,
        coeff=lambda j, V: coeff_batch(j, V)[0],
        source=lambda V: source_batch(V)[0],
        symmetrizer=lambda V: symmetrizer_batch(V)[0],
        equilibrium=np.zeros(n),
        jacobians={"source": lambda V: jacobian},
        coeff_batch=coeff_batch,
        source_batch=source_batch,
        symmetrizer_batch=symmetrizer_batch,
        damped_mode_hook=euler_damped_mode,
        rhs_hook=euler_rhs,
        speed_hook=partial(sound_speed_bound, gamma=float(gamma)),
        parameters={"gamma": float(gamma), "lambda": float(lam)},
    )
    logger.debug(f"Built {system.name} with gamma={gamma}, lambda={lam}")
    return system


def sound_speed_bound(max_abs_state: float, gamma: float) -> float:
    """Upper bound for |u| + sqrt(1 + G(n)) given sup |V|."""
    return max_abs_state + math.sqrt(1.0 + max(0.0, gamma - 1.0) * max_abs_state)
