"""
Dealiased pseudospectral RK4 integrator for quasilinear systems

    dV/dt = -A^0(V)^-1 ( sum_j A^j(V) dV/dx_j - H(V) )

on a periodic box. Spatial derivatives are spectral, products are formed in
physical space on the two-thirds dealiased state, and every RK stage is made
Hermitian again. Systems may provide a dedicated right-hand side (the
built-in Euler system does).

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import BlowupSuspected, CoefficientSingular
from ..lp.spectral_field import SpectralField, SpectralGrid
from ..systems.system_model import SystemSpec, linearize
from .initial_data import make_initial_datum
from .run_config import RunConfig

logger = logging.getLogger(__name__)

MAX_HALVINGS = 8
GROWTH_LIMIT = 1e3
DAMPING_STABILITY = 2.0


@dataclass
class Trajectory:
    """Fields at the output times of one run."""
    times: List[float]
    fields: List[SpectralField]
    dt: Optional[float] = None
    steps: int = 0
    halvings: int = 0
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Tuple[float, SpectralField]]:
        return iter(zip(self.times, self.fields))


def generic_rhs(Z: np.ndarray, grid: SpectralGrid, system: SystemSpec) -> np.ndarray:
    n = system.n
    Z = grid.dealias(Z)
    perturbation = grid.to_physical(Z).reshape(n, -1).T
    states = perturbation + system.equilibrium

    flux = np.zeros_like(perturbation)
    for j in range(grid.d):
        dZ = grid.to_physical(grid.derivative(Z, j)).reshape(n, -1).T
        flux += np.einsum("pab,pb->pa", system.coeff_at(j + 1, states), dZ)
    rhs = system.source_at(states) - flux

    try:
        rate = np.linalg.solve(system.coeff_at(0, states), rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise CoefficientSingular(f"A^0(V) is singular at some grid point: {e}") from e
    if not np.all(np.isfinite(rate)):
        raise CoefficientSingular("A^0(V)^-1 produced non-finite values")
    return grid.dealias(grid.to_spectral(rate.T.reshape(Z.shape)))


class PseudospectralIntegrator:
    """Classical RK4 with output-aligned steps and neighbourhood step halving."""

    def __init__(self, system: SystemSpec, grid: SpectralGrid, dt: Optional[float] = None,
                 cfl: float = 0.4, radius: Optional[float] = None):
        if grid.d != system.d:
            raise ValueError(f"Grid dimension {grid.d} differs from system dimension {system.d}")
        self.system = system
        self.grid = grid
        self.dt = dt
        self.cfl = cfl
        self.radius = system.neighborhood_radius if radius is None else radius
        self.lin = linearize(system)
        self.halvings = 0
        self.steps = 0
        self._initial_sup = 0.0

    def rhs(self, Z: np.ndarray) -> np.ndarray:
        if self.system.rhs_hook is not None:
            return self.system.rhs_hook(Z, self.grid, self.system)
        return generic_rhs(Z, self.grid, self.system)

    # -- time step -------------------------------------------------------------

    def wave_speed(self, Z: np.ndarray) -> float:
        system = self.system
        if system.speed_hook is not None:
            sup = float(np.max(np.abs(self.grid.to_physical(Z)))) if Z.size else 0.0
            return system.speed_hook(sup)
        if system.linear:
            eigs = np.linalg.eigvals(self.lin.M_axes)
            return float(np.max(np.abs(eigs)))
        states = self.grid.to_physical(self.grid.dealias(Z)).reshape(system.n, -1).T + system.equilibrium
        A0 = system.coeff_at(0, states)
        speed = 0.0
        for j in range(system.d):
            eigs = np.linalg.eigvals(np.linalg.solve(A0, system.coeff_at(j + 1, states)))
            speed = max(speed, float(np.max(np.abs(eigs))))
        return speed

    def stable_dt(self, Z: np.ndarray) -> float:
        """cfl * min(dx / speed, 2 / rho(N))."""
        dx = min(b / r for b, r in zip(self.grid.box_length, self.grid.resolution))
        speed = self.wave_speed(Z)
        rate = float(np.max(np.abs(np.linalg.eigvals(self.lin.N))))
        limits = [dx / speed if speed > 0 else math.inf,
                  DAMPING_STABILITY / rate if rate > 0 else math.inf]
        limit = self.cfl * min(limits)
        return limit if math.isfinite(limit) else self.cfl * dx

    # -- stepping --------------------------------------------------------------

    def rk4(self, Z: np.ndarray, h: float) -> np.ndarray:
        sym = self.grid.enforce_hermitian
        k1 = self.rhs(Z)
        k2 = self.rhs(sym(Z + 0.5 * h * k1))
        k3 = self.rhs(sym(Z + 0.5 * h * k2))
        k4 = self.rhs(sym(Z + h * k3))
        return sym(Z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))

    def step(self, Z: np.ndarray, h: float, depth: int = 0) -> np.ndarray:
        new = self.rk4(Z, h)
        if not np.all(np.isfinite(new)):
            raise BlowupSuspected(f"Non-finite state after a step of size {h:.3e}")
        sup = float(np.max(np.abs(self.grid.to_physical(new))))
        if self._initial_sup > 0 and sup > GROWTH_LIMIT * self._initial_sup:
            raise BlowupSuspected(f"sup |V - Vbar| = {sup:.3e} exceeds {GROWTH_LIMIT:g} x initial")

        if not self.system.linear and sup > self.radius:
            if depth >= MAX_HALVINGS:
                raise BlowupSuspected(
                    f"sup |V - Vbar| = {sup:.3e} stays above radius {self.radius} after {MAX_HALVINGS} halvings"
                )
            self.halvings += 1
            logger.debug(f"Halving step {h:.3e} (sup {sup:.3e} > {self.radius})")
            half = self.step(Z, 0.5 * h, depth + 1)
            return self.step(half, 0.5 * h, depth + 1)
        self.steps += 1
        return new

    def integrate(self, Z0: SpectralField, times: Sequence[float]) -> Trajectory:
        if Z0.resolution != self.grid.resolution:
            raise ValueError(f"Field resolution {Z0.resolution} differs from grid {self.grid.resolution}")
        times = [float(t) for t in times]
        if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("Output times must be non-negative and strictly increasing")

        Z = self.grid.enforce_hermitian(Z0.coeffs)
        limit = self.stable_dt(Z)
        dt = limit if self.dt is None else self.dt
        if dt > limit * (1.0 + 1e-12):
            raise ValueError(f"dt = {dt:.3e} exceeds the stability limit {limit:.3e}")
        self._initial_sup = float(np.max(np.abs(self.grid.to_physical(Z))))

        fields, t = [], 0.0
        for t_out in times:
            remaining = t_out - t
            if remaining > 0:
                nsteps = max(1, math.ceil(remaining / dt - 1e-9))
                h = remaining / nsteps
                for _ in range(nsteps):
                    Z = self.step(Z, h)
            t = t_out
            fields.append(Z0.with_coeffs(Z.copy()))

        logger.info(f"Integrated {self.system.name} to t={t:g}: {self.steps} steps, "
                    f"{self.halvings} halvings, dt={dt:.3e}")
        return Trajectory(times=times, fields=fields, dt=dt, steps=self.steps, halvings=self.halvings)


def nonlinear_integrate(system: SystemSpec, config: RunConfig,
                        Z0: Optional[SpectralField] = None) -> Trajectory:
    Z0 = make_initial_datum(config, system) if Z0 is None else Z0
    integrator = PseudospectralIntegrator(system, Z0.grid, dt=config.dt, cfl=config.cfl,
                                          radius=config.neighborhood_radius)
    return integrator.integrate(Z0, config.times())


# ------------------------------------------------------------
# Damping rescaling
# ------------------------------------------------------------

def to_unit_damping(field_: SpectralField, lam: float) -> SpectralField:
    """Field of a damping-lam run seen in the lam = 1 frame, y = lam x."""
    return field_.rescaled(1.0 / lam)


def rescale_trajectory(trajectory: Trajectory, lam: float) -> Trajectory:
    """Map a damping-lam run to the lam = 1 frame: (t, x) -> (lam t, lam x)."""
    return Trajectory(
        times=[lam * t for t in trajectory.times],
        fields=[to_unit_damping(f, lam) for f in trajectory.fields],
        dt=None if trajectory.dt is None else lam * trajectory.dt,
        steps=trajectory.steps,
        halvings=trajectory.halvings,
        metadata=dict(trajectory.metadata, rescaled_from_lambda=lam),
    )


def rescaled_datum(field_: SpectralField, lam: float) -> SpectralField:
    """The datum z(x / lam) on the box enlarged by lam, for the lam = 1 run."""
    return field_.rescaled(1.0 / lam)
