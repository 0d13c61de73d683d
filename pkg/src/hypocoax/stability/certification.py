"""
Frequency-by-frequency certification of the corrected energy.

For xi = rho omega the mode generator is A = i rho M_omega + N and the weight is

    P(rho, omega) = Abar0 + min(rho, 1/rho) * C(omega),
    C(omega) = sum_k eps_k (-i/2) (B_k - B_k^T),  B_k = (M^k)^T N^T N M^{k-1},

so that Z^* C Z = sum_k eps_k Im((N M^{k-1} Z) . (N M^k Z)). The dissipation
matrix D = A^* P + P A must be positive; the certified rate is
c_min = min lambda_min(D) / (min(1, rho^2) lambda_max(Abar0)).

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..errors import CannotCertify, WeightNotPositive
from ..systems.system_model import LinearizedSystem
from .schedule import EpsilonSchedule, make_schedule
from .sk_analysis import DEFAULT_GRID, kalman_blocks, sphere_grid

logger = logging.getLogger(__name__)

BLOCK_EDGES = (0.75, 4.0 / 3.0, 1.5, 8.0 / 3.0)
CERTIFY_TOL = 1e-12
AUTOTUNE_START = 0.5
AUTOTUNE_MAX_ITER = 40
AUTOTUNE_REL_WIDTH = 1e-3


def default_rho_grid(rho_min: float = 1e-2, rho_max: float = 1e2, count: int = 64) -> np.ndarray:
    grid = np.logspace(np.log10(rho_min), np.log10(rho_max), count)
    edges = [r for r in BLOCK_EDGES if rho_min <= r <= rho_max]
    return np.unique(np.concatenate([grid, edges]))


def frequency_scale(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.minimum(rho, 1.0 / rho)


def corrector_products(lin: LinearizedSystem, M_batch: np.ndarray) -> np.ndarray:
    """B_k = (M^k)^T N^T N M^{k-1} for k = 1..n-1, shape (n-1, P, n, n)."""
    blocks = kalman_blocks(lin, M_batch)
    return np.einsum("kpba,kpbc->kpac", blocks[1:], blocks[:-1])


def hermitian_corrector(lin: LinearizedSystem, values: Sequence[float], M_batch: np.ndarray) -> np.ndarray:
    """C(omega) per direction, shape (P, n, n), Hermitian."""
    if lin.n < 2:
        return np.zeros((M_batch.shape[0], lin.n, lin.n), dtype=complex)
    B = corrector_products(lin, M_batch)
    weights = np.asarray(values[1:lin.n], dtype=float)
    antisym = np.einsum("k,kpac->pac", weights, B - np.swapaxes(B, -1, -2))
    return -0.5j * antisym


def gram_tail(lin: LinearizedSystem, values: Sequence[float], M_batch: np.ndarray) -> np.ndarray:
    """sum_{k>=1} eps_k (N M^k)^T (N M^k), shape (P, n, n)."""
    blocks = kalman_blocks(lin, M_batch)[1:]
    weights = np.asarray(values[1:lin.n], dtype=float)
    return np.einsum("k,kpba,kpbc->pac", weights, blocks, blocks)


def corrector_norm(lin: LinearizedSystem, schedule: EpsilonSchedule,
                   omega_grid: Optional[np.ndarray] = None) -> float:
    """max over omega of sum_k eps_k ||B_k(omega)||_2."""
    omegas = sphere_grid(lin.d, DEFAULT_GRID) if omega_grid is None else np.atleast_2d(omega_grid)
    if lin.n < 2:
        return 0.0
    B = corrector_products(lin, lin.M_batch(omegas))
    norms = np.linalg.norm(B, ord=2, axis=(-2, -1))
    weights = np.asarray(schedule.values[1:lin.n], dtype=float)
    return float(np.max(weights @ norms))


@dataclass
class Certificate:
    c_min: float
    min_weight_eig: float
    worst_rho: float
    worst_omega: List[float]
    corrector_norm: float
    epsilon: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def certify_hypocoercivity(lin: LinearizedSystem, schedule: EpsilonSchedule,
                           rho_grid: Optional[np.ndarray] = None,
                           omega_grid: Optional[np.ndarray] = None) -> Certificate:
    rhos = default_rho_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float)
    omegas = sphere_grid(lin.d, DEFAULT_GRID) if omega_grid is None else np.atleast_2d(omega_grid)

    M_batch = lin.M_batch(omegas)
    corrector = hermitian_corrector(lin, schedule.values, M_batch)
    A0 = lin.A0.astype(complex)
    top_weight = float(np.linalg.eigvalsh(lin.A0)[-1])

    c_min, min_weight = math.inf, math.inf
    worst_rho, worst_omega = float(rhos[0]), omegas[0]
    for rho in rhos:
        weight = A0 + frequency_scale(rho) * corrector
        weight_eigs = np.linalg.eigvalsh(weight)[:, 0]
        min_weight = min(min_weight, float(np.min(weight_eigs)))

        generator = 1j * rho * M_batch + lin.N
        dissipation = np.conj(np.swapaxes(generator, -1, -2)) @ weight + weight @ generator
        rates = np.linalg.eigvalsh(dissipation)[:, 0] / (min(1.0, rho * rho) * top_weight)
        worst = int(np.argmin(rates))
        if rates[worst] < c_min:
            c_min, worst_rho, worst_omega = float(rates[worst]), float(rho), omegas[worst]

    if min_weight <= 0.0:
        raise WeightNotPositive(
            f"lambda_min(P) = {min_weight:.3e} <= 0 at epsilon = {schedule.epsilon}"
        )

    certificate = Certificate(
        c_min=c_min,
        min_weight_eig=min_weight,
        worst_rho=worst_rho,
        worst_omega=[float(w) for w in worst_omega],
        corrector_norm=corrector_norm(lin, schedule, omegas),
        epsilon=schedule.epsilon,
    )
    logger.debug(f"epsilon={schedule.epsilon:.6g}: c_min={c_min:.4e}, lambda_min(P)={min_weight:.4e}")
    return certificate


@dataclass
class AutotuneResult:
    schedule: EpsilonSchedule
    certificate: Certificate
    trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def c_min(self) -> float:
        return self.certificate.c_min

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schedule": self.schedule.to_dict(),
            "certificate": self.certificate.to_dict(),
            "trace": self.trace,
        }


def autotune_epsilon(lin: LinearizedSystem, kappa0: Optional[float] = None,
                     rho_grid: Optional[np.ndarray] = None,
                     omega_grid: Optional[np.ndarray] = None,
                     delta: float = 1.0,
                     max_iter: int = AUTOTUNE_MAX_ITER) -> AutotuneResult:
    """
    Largest tested epsilon in (0, 1/2] whose schedule certifies: c_min > 0,
    lambda_min(P) >= lambda_min(Abar0)/2 and the corrector bound.
    """
    kappa0 = lin.kappa0 if kappa0 is None else kappa0
    if not (math.isfinite(kappa0) and kappa0 > 0):
        logger.warning(f"kappa0 = {kappa0} is not usable for eps_0; falling back to 1.0")
        kappa0 = 1.0

    weight_floor = 0.5 * float(np.linalg.eigvalsh(lin.A0)[0])
    corrector_cap = 0.5 * (2.0 * math.pi) ** (-lin.d)
    trace: List[Dict[str, Any]] = []

    def attempt(epsilon):
        schedule = make_schedule(lin.n, lin.d, kappa0, delta, epsilon)
        try:
            cert = certify_hypocoercivity(lin, schedule, rho_grid, omega_grid)
        except WeightNotPositive as e:
            trace.append({"epsilon": epsilon, "certified": False, "reason": str(e)})
            return schedule, None
        ok = (cert.c_min > CERTIFY_TOL and cert.min_weight_eig >= weight_floor
              and cert.corrector_norm <= corrector_cap)
        trace.append({"epsilon": epsilon, "certified": ok, "c_min": cert.c_min,
                      "min_weight_eig": cert.min_weight_eig, "corrector_norm": cert.corrector_norm})
        return schedule, (cert if ok else None)

    best = None
    schedule, cert = attempt(AUTOTUNE_START)
    if cert is not None:
        best = (schedule, cert)
    else:
        lo, hi = 0.0, AUTOTUNE_START
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            schedule, cert = attempt(mid)
            if cert is not None:
                lo, best = mid, (schedule, cert)
            else:
                hi = mid
            if best is not None and hi - lo <= AUTOTUNE_REL_WIDTH * hi:
                break

    if best is None:
        raise CannotCertify(
            f"No epsilon in (0, {AUTOTUNE_START}] certified after {len(trace)} attempts",
            diagnostics={"trace": trace, "kappa0": kappa0},
        )

    schedule, cert = best
    logger.info(f"Certified epsilon={schedule.epsilon:.6g} with c_min={cert.c_min:.4e}")
    return AutotuneResult(schedule=schedule, certificate=cert, trace=trace)
