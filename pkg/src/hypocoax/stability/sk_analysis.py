"""
Shizuta-Kawashima condition: Kalman rank of (M_omega, N) and the Gram form

    K(omega) = sum_k eps_k (M_omega^T)^k N^T N M_omega^k

over the unit sphere, with a Nelder-Mead refinement at the worst grid point.

Author: Hypocoax Team
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from ..errors import DimensionMismatch, InvalidDirection
from ..systems.system_model import RANK_TOL, LinearizedSystem
from .schedule import EpsilonSchedule

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
SK_TOL = 1e-10
MIN_GRID = 8
DEFAULT_GRID = 64


def sphere_grid(d: int, count: int = DEFAULT_GRID) -> np.ndarray:
    """Directions on S^{d-1}: +-1, count angles, or (count/2) x count polar/azimuth pairs."""
    if count < MIN_GRID:
        raise ValueError(f"Sphere grid needs at least {MIN_GRID} points per angle, got {count}")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if d == 3:
        polar = np.pi * (np.arange(count // 2) + 0.5) / (count // 2)
        azimuth = 2.0 * np.pi * np.arange(count) / count
        p, a = np.meshgrid(polar, azimuth, indexing="ij")
        return np.stack([np.sin(p) * np.cos(a), np.sin(p) * np.sin(a), np.cos(p)], axis=-1).reshape(-1, 3)
    raise ValueError(f"Sphere grids are provided for d <= 3, got d={d}")


def _direction_from_angles(angles: np.ndarray, d: int) -> np.ndarray:
    if d == 2:
        return np.array([np.cos(angles[0]), np.sin(angles[0])])
    p, a = angles
    return np.array([np.sin(p) * np.cos(a), np.sin(p) * np.sin(a), np.cos(p)])


def _angles_from_direction(omega: np.ndarray) -> np.ndarray:
    if omega.size == 2:
        return np.array([np.arctan2(omega[1], omega[0])])
    return np.array([np.arccos(np.clip(omega[2], -1.0, 1.0)), np.arctan2(omega[1], omega[0])])


def kalman_blocks(lin: LinearizedSystem, M_batch: np.ndarray) -> np.ndarray:
    """N M^k for k = 0..n-1, shape (n, P, n, n)."""
    P = M_batch.shape[0]
    blocks = np.empty((lin.n, P, lin.n, lin.n))
    blocks[0] = lin.N
    for k in range(1, lin.n):
        blocks[k] = blocks[k - 1] @ M_batch
    return blocks


def gram_matrices(lin: LinearizedSystem, omegas: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    blocks = kalman_blocks(lin, lin.M_batch(omegas))
    weights = np.asarray(weights, dtype=float)
    return np.einsum("k,kpba,kpbc->pac", weights, blocks, blocks)


def kalman_rank_test(lin: LinearizedSystem, omega: Sequence[float]) -> Tuple[int, float]:
    """Numerical rank of [N; N M; ...; N M^{n-1}] and its n-th singular value."""
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if omega.size != lin.d:
        raise DimensionMismatch(f"Direction has length {omega.size}, expected {lin.d}")
    if abs(np.linalg.norm(omega) - 1.0) > UNIT_TOL:
        raise InvalidDirection(f"|omega| = {np.linalg.norm(omega):.15g} is not 1")

    stack = kalman_blocks(lin, lin.M_batch(omega)).reshape(lin.n * lin.n, lin.n)
    sigma = np.linalg.svd(stack, compute_uv=False)
    if sigma[0] == 0.0:
        return 0, 0.0
    rank = int(np.sum(sigma > RANK_TOL * sigma[0]))
    return rank, float(sigma[lin.n - 1])


@dataclass
class SkReport:
    holds: bool
    min_gram_eig: float
    worst_omega: np.ndarray
    kalman_min_sigma: float
    kalman_rank: int
    grid_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "N_Vbar": self.min_gram_eig,
            "worst_omega": self.worst_omega.tolist(),
            "kalman_min_sigma": self.kalman_min_sigma,
            "kalman_rank": self.kalman_rank,
            "grid_size": self.grid_size,
        }


def sk_condition(lin: LinearizedSystem, schedule: Optional[EpsilonSchedule] = None,
                 sphere_grid_size: int = DEFAULT_GRID,
                 weights: Optional[Sequence[float]] = None) -> SkReport:
    """Minimum of the Gram form over directions; SK holds iff it exceeds SK_TOL."""
    if weights is None:
        if schedule is None:
            raise ValueError("Either a schedule or explicit weights is required")
        weights = schedule.values
    weights = np.asarray(weights, dtype=float)

    omegas = sphere_grid(lin.d, sphere_grid_size)
    M_batch = lin.M_batch(omegas)
    blocks = kalman_blocks(lin, M_batch)
    gram = np.einsum("k,kpba,kpbc->pac", weights, blocks, blocks)
    gram_eigs = np.linalg.eigvalsh(gram)[:, 0]

    stacks = np.moveaxis(blocks, 0, 1).reshape(len(omegas), lin.n * lin.n, lin.n)
    sigma = np.linalg.svd(stacks, compute_uv=False)
    top = np.max(sigma[:, 0])
    ranks = np.sum(sigma > RANK_TOL * top, axis=1) if top > 0 else np.zeros(len(omegas), dtype=int)

    worst = int(np.argmin(gram_eigs))
    min_eig = float(gram_eigs[worst])
    worst_omega = omegas[worst]

    if lin.d >= 2:
        def objective(angles):
            omega = _direction_from_angles(angles, lin.d)
            return float(np.linalg.eigvalsh(gram_matrices(lin, omega[None], weights)[0])[0])

        result = minimize(objective, _angles_from_direction(worst_omega), method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 400})
        if result.fun < min_eig:
            min_eig = float(result.fun)
            worst_omega = _direction_from_angles(result.x, lin.d)
        logger.debug(f"Nelder-Mead refinement: {gram_eigs[worst]:.6e} -> {min_eig:.6e}")

    report = SkReport(
        holds=min_eig > SK_TOL,
        min_gram_eig=min_eig,
        worst_omega=np.asarray(worst_omega, dtype=float),
        kalman_min_sigma=float(np.min(sigma[:, lin.n - 1])),
        kalman_rank=int(np.min(ranks)),
        grid_size=len(omegas),
    )
    logger.info(f"SK condition holds={report.holds}, N_Vbar={report.min_gram_eig:.4e}")
    return report
