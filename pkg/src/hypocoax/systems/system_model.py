"""
Quasilinear partially dissipative systems and their linearization.

A system A^0(V) dV/dt + sum_j A^j(V) dV/dx_j = H(V) is declared through
evaluators for the coefficient matrices, the source and a Friedrichs
symmetrizer S(V). The state splits as V = (V1, V2) with n1 conserved
components whose source vanishes.

Author: Hypocoax Team
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.stats import qmc

from ..errors import (
    DimensionMismatch,
    NonSymmetric,
    NotEquilibrium,
    SingularWeight,
    SystemFileError,
)

logger = logging.getLogger(__name__)

EQUILIBRIUM_TOL = 1e-12
SYMMETRY_TOL = 1e-10
STRUCTURE_TOL = 1e-9
RANK_TOL = 1e-10
RESIDUAL_TOL = 1e-8
FD_TOL = 1e-6
FD_HESSIAN_STEP = 1e-4
DEFAULT_SAMPLES = 100
DEFAULT_RADIUS = 0.1


def fd_step(scale: float = 1.0) -> float:
    return np.finfo(float).eps ** (1.0 / 3.0) * max(1.0, scale)


@dataclass(eq=False)
class SystemSpec:
    """
    A^0 dV/dt + sum_j A^j dV/dx_j = H(V) near the equilibrium V-bar.

    coeff(j, V) returns A^j(V) for j = 0..d. `jacobians["source"]`, when given,
    returns D_V(S H)(V); otherwise derivatives are taken by finite differences.
    The *_batch evaluators take stacked states of shape (P, n).
    """
    name: str
    d: int
    n: int
    n1: int
    coeff: Callable[[int, np.ndarray], np.ndarray]
    source: Callable[[np.ndarray], np.ndarray]
    symmetrizer: Callable[[np.ndarray], np.ndarray]
    equilibrium: np.ndarray
    jacobians: Dict[str, Callable] = field(default_factory=dict)
    neighborhood_radius: float = DEFAULT_RADIUS
    coeff_batch: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    source_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    symmetrizer_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    damped_mode_hook: Optional[Callable] = None
    rhs_hook: Optional[Callable] = None
    speed_hook: Optional[Callable[[float], float]] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    linear: bool = False

    def __post_init__(self):
        self.equilibrium = np.asarray(self.equilibrium, dtype=float)
        if self.d < 1:
            raise DimensionMismatch(f"Spatial dimension must be >= 1, got {self.d}")
        if not 0 <= self.n1 < self.n:
            raise DimensionMismatch(f"Need 0 <= n1 < n, got n1={self.n1}, n={self.n}")
        if self.equilibrium.shape != (self.n,):
            raise DimensionMismatch(
                f"Equilibrium has shape {self.equilibrium.shape}, expected ({self.n},)"
            )

    @property
    def n2(self) -> int:
        return self.n - self.n1

    # -- grid-wide evaluation ----------------------------------------------

    def coeff_at(self, j: int, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.coeff_batch is not None:
            return np.asarray(self.coeff_batch(j, states), dtype=float)
        return np.stack([np.asarray(self.coeff(j, v), dtype=float) for v in states])

    def source_at(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.source_batch is not None:
            return np.asarray(self.source_batch(states), dtype=float)
        return np.stack([np.asarray(self.source(v), dtype=float) for v in states])

    def symmetrizer_at(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.symmetrizer_batch is not None:
            return np.asarray(self.symmetrizer_batch(states), dtype=float)
        return np.stack([np.asarray(self.symmetrizer(v), dtype=float) for v in states])

    def symmetrized_source(self, V: np.ndarray) -> np.ndarray:
        return self.symmetrizer(V) @ self.source(V)

    def residual(self, Z: np.ndarray, L: np.ndarray) -> np.ndarray:
        """r(Z) = (S H)(V-bar + Z) + L Z; rows of Z are states when Z is 2-D."""
        Z = np.asarray(Z, dtype=float)
        states = np.atleast_2d(Z) + self.equilibrium
        sh = np.einsum("pab,pb->pa", self.symmetrizer_at(states), self.source_at(states))
        r = sh + np.atleast_2d(Z) @ L.T
        return r[0] if Z.ndim == 1 else r


# ------------------------------------------------------------
# Linearization
# ------------------------------------------------------------

def _symmetry_defect(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix - matrix.T))


def dissipativity_constant(matrix: np.ndarray) -> float:
    """
    Largest c with (M eta | eta) >= c |M eta|^2 for every eta.

    Returns inf when M = 0 (the condition holds vacuously) and 0 when the
    symmetric part is indefinite on the range or couples it to ker M.
    """
    M = np.asarray(matrix, dtype=float)
    _, sigma, vt = np.linalg.svd(M)
    if sigma.size == 0 or sigma[0] == 0.0:
        return math.inf

    tol = RANK_TOL * sigma[0]
    rank = int(np.sum(sigma > tol))
    q_range = vt[:rank].T
    q_kernel = vt[rank:].T
    sym = 0.5 * (M + M.T)

    if q_kernel.size:
        coupling = np.linalg.norm(q_kernel.T @ sym @ q_range)
        if coupling > tol:
            return 0.0

    numerator = q_range.T @ sym @ q_range
    denominator = q_range.T @ (M.T @ M) @ q_range
    lowest = scipy.linalg.eigh(numerator, denominator, eigvals_only=True)[0]
    return max(0.0, float(lowest))


@dataclass(eq=False)
class LinearizedSystem:
    """Frozen coefficients at V-bar: Abar[j], L, N = Abar0^-1 L, M_j = Abar0^-1 Abar[j]."""
    d: int
    n: int
    n1: int
    Abar: np.ndarray
    L: np.ndarray
    N: np.ndarray
    M_axes: np.ndarray
    kappa0: float

    @classmethod
    def from_matrices(cls, Abar: Sequence[np.ndarray], L: np.ndarray, n1: int) -> "LinearizedSystem":
        Abar = np.asarray(Abar, dtype=float)
        L = np.asarray(L, dtype=float)
        if Abar.ndim != 3 or Abar.shape[1] != Abar.shape[2]:
            raise DimensionMismatch(f"Abar must have shape (d+1, n, n), got {Abar.shape}")
        d, n = Abar.shape[0] - 1, Abar.shape[1]
        if L.shape != (n, n):
            raise DimensionMismatch(f"L has shape {L.shape}, expected ({n}, {n})")

        A0 = Abar[0]
        scale = max(1.0, float(np.linalg.norm(A0)))
        if _symmetry_defect(A0) > SYMMETRY_TOL * scale:
            raise SingularWeight(f"Abar^0 is not symmetric (defect {_symmetry_defect(A0):.3e})")
        try:
            np.linalg.cholesky(A0)
        except np.linalg.LinAlgError as e:
            raise SingularWeight(f"Abar^0 is not positive definite: {e}") from e

        for j in range(1, d + 1):
            defect = _symmetry_defect(Abar[j])
            if defect > SYMMETRY_TOL * max(1.0, float(np.linalg.norm(Abar[j]))):
                raise NonSymmetric(f"Abar^{j} fails the symmetry tolerance (defect {defect:.3e})")

        N = np.linalg.solve(A0, L)
        M_axes = np.stack([np.linalg.solve(A0, Abar[j]) for j in range(1, d + 1)])
        return cls(d=d, n=n, n1=n1, Abar=Abar, L=L, N=N, M_axes=M_axes,
                   kappa0=dissipativity_constant(N))

    @classmethod
    def from_generators(cls, N: np.ndarray, M_list: Sequence[np.ndarray],
                        A0: Optional[np.ndarray] = None, n1: Optional[int] = None) -> "LinearizedSystem":
        """Build directly from (N, M_1..M_d) without symmetry validation."""
        N = np.asarray(N, dtype=float)
        n = N.shape[0]
        A0 = np.eye(n) if A0 is None else np.asarray(A0, dtype=float)
        M_axes = np.asarray(M_list, dtype=float).reshape(-1, n, n)
        Abar = np.concatenate([A0[None], np.einsum("ab,jbc->jac", A0, M_axes)])
        if n1 is None:
            n1 = n - int(np.linalg.matrix_rank(N)) if np.any(N) else n - 1
        return cls(d=M_axes.shape[0], n=n, n1=n1, Abar=Abar, L=A0 @ N, N=N,
                   M_axes=M_axes, kappa0=dissipativity_constant(N))

    @property
    def A0(self) -> np.ndarray:
        return self.Abar[0]

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def L22(self) -> np.ndarray:
        return self.L[self.n1:, self.n1:]

    def M(self, omega: Sequence[float]) -> np.ndarray:
        omega = np.asarray(omega, dtype=float).reshape(-1)
        if omega.shape != (self.d,):
            raise DimensionMismatch(f"Direction has length {omega.size}, expected {self.d}")
        return np.einsum("j,jab->ab", omega, self.M_axes)

    def M_batch(self, omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float).reshape(-1, self.d)
        return np.einsum("pj,jab->pab", omegas, self.M_axes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d, "n": self.n, "n1": self.n1,
            "Abar": self.Abar.tolist(), "L": self.L.tolist(), "N": self.N.tolist(),
            "kappa0": None if math.isinf(self.kappa0) else self.kappa0,
        }


def source_jacobian(system: SystemSpec, V: np.ndarray) -> np.ndarray:
    """D_V(S H)(V), analytic when supplied, central differences otherwise."""
    if "source" in system.jacobians:
        return np.asarray(system.jacobians["source"](V), dtype=float)

    h = fd_step(float(np.max(np.abs(V))) if V.size else 1.0)
    J = np.empty((system.n, system.n))
    for i in range(system.n):
        step = np.zeros(system.n)
        step[i] = h
        J[:, i] = (system.symmetrized_source(V + step) - system.symmetrized_source(V - step)) / (2 * h)
    return J


def conserved_rows_of_L(system: SystemSpec, L: np.ndarray) -> Tuple[float, float]:
    """(max |L[:n1]|, tolerance): exact for analytic Jacobians, FD_TOL for differenced ones."""
    size = float(np.max(np.abs(L[:system.n1]))) if system.n1 else 0.0
    return size, EQUILIBRIUM_TOL if "source" in system.jacobians else FD_TOL


def linearize(system: SystemSpec) -> LinearizedSystem:
    """Frozen-coefficient matrices of the system at its equilibrium."""
    Vbar = system.equilibrium
    H = np.asarray(system.source(Vbar), dtype=float)
    if np.max(np.abs(H)) > EQUILIBRIUM_TOL:
        raise NotEquilibrium(f"|H(V-bar)| = {np.max(np.abs(H)):.3e} for system {system.name}")

    S = np.asarray(system.symmetrizer(Vbar), dtype=float)
    Abar = [S @ np.asarray(system.coeff(j, Vbar), dtype=float) for j in range(system.d + 1)]
    L = -source_jacobian(system, Vbar)

    lin = LinearizedSystem.from_matrices(Abar, L, system.n1)
    conserved_rows, row_tol = conserved_rows_of_L(system, L)
    if conserved_rows > row_tol:
        logger.warning(f"First {system.n1} rows of L do not vanish (max {conserved_rows:.3e}); "
                       f"check_block_structure will fail")

    logger.info(f"Linearized {system.name}: n={system.n}, n1={system.n1}, kappa0={lin.kappa0:.4g}")
    return lin


# ------------------------------------------------------------
# Structural checks
# ------------------------------------------------------------

@dataclass
class StructureReport:
    passed: bool
    checks: Dict[str, bool] = field(default_factory=dict)
    metrics: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": dict(self.checks),
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "notes": list(self.notes),
        }


def sample_neighborhood(system: SystemSpec, count: int = DEFAULT_SAMPLES,
                        radius: Optional[float] = None, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol points mapped from the cube onto the ball around V-bar."""
    radius = system.neighborhood_radius if radius is None else radius
    sampler = qmc.Sobol(d=system.n, scramble=True, seed=seed)
    cube = 2.0 * sampler.random_base2(m=max(1, math.ceil(math.log2(count))))[:count] - 1.0

    lengths = np.linalg.norm(cube, axis=1, keepdims=True)
    sup = np.max(np.abs(cube), axis=1, keepdims=True)
    ball = np.divide(radius * sup * cube, lengths, out=np.zeros_like(cube), where=lengths > 0)
    return system.equilibrium + ball


def check_symmetrizability(system: SystemSpec, samples: Optional[np.ndarray] = None,
                           tol: float = STRUCTURE_TOL) -> StructureReport:
    states = sample_neighborhood(system) if samples is None else np.atleast_2d(samples)
    S = system.symmetrizer_at(states)

    max_defect = 0.0
    symmetric = True
    for j in range(system.d + 1):
        SA = S @ system.coeff_at(j, states)
        defects = np.linalg.norm(SA - np.swapaxes(SA, 1, 2), axis=(1, 2))
        scales = np.maximum(1.0, np.linalg.norm(SA, axis=(1, 2)))
        max_defect = max(max_defect, float(np.max(defects)))
        symmetric &= bool(np.all(defects <= tol * scales))

    SA0 = S @ system.coeff_at(0, states)
    weight_eig = float(np.min(np.linalg.eigvalsh(0.5 * (SA0 + np.swapaxes(SA0, 1, 2)))))
    s_defect = float(np.max(np.linalg.norm(S - np.swapaxes(S, 1, 2), axis=(1, 2))))
    s_eig = float(np.min(np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, 1, 2)))))

    checks = {
        "symmetric": symmetric,
        "weight_positive": weight_eig > 0.0,
        "symmetrizer_spd": s_defect <= tol and s_eig > 0.0,
    }
    report = StructureReport(
        passed=all(checks.values()),
        checks=checks,
        metrics={
            "max_symmetry_defect": max_defect,
            "min_weight_eig": weight_eig,
            "symmetrizer_defect": s_defect,
            "min_symmetrizer_eig": s_eig,
            "samples": float(len(states)),
        },
    )
    if not report.passed:
        logger.warning(f"Symmetrizability check failed for {system.name}: {checks}")
    return report


def _symmetrized_coeff(system: SystemSpec, j: int, V: np.ndarray) -> np.ndarray:
    return system.symmetrizer(V) @ system.coeff(j, V)


def check_block_structure(system: SystemSpec, samples: Optional[np.ndarray] = None,
                          lin: Optional[LinearizedSystem] = None,
                          tol: float = STRUCTURE_TOL) -> StructureReport:
    """
    Base structure (block-diagonal symmetrized A^0, r(Z1, 0) = 0, conserved rows of
    H and of L vanish) decides `passed`; the quadratic-structure flags are reported.
    """
    lin = linearize(system) if lin is None else lin
    states = sample_neighborhood(system) if samples is None else np.atleast_2d(samples)
    n1, Vbar = system.n1, system.equilibrium

    S = system.symmetrizer_at(states)
    A0 = S @ system.coeff_at(0, states)
    off_block = np.maximum(np.linalg.norm(A0[:, :n1, n1:], axis=(1, 2)),
                           np.linalg.norm(A0[:, n1:, :n1], axis=(1, 2)))
    off_scale = np.maximum(1.0, np.linalg.norm(A0, axis=(1, 2)))

    conserved = states.copy()
    conserved[:, n1:] = Vbar[n1:]
    r_conserved = system.residual(conserved - Vbar, lin.L)
    conserved_source = system.source_at(states)[:, :n1]
    l_rows, l_rows_tol = conserved_rows_of_L(system, lin.L)

    checks = {
        "a0_block_diagonal": bool(np.all(off_block <= tol * off_scale)),
        "residual_vanishes_on_conserved": float(np.max(np.abs(r_conserved))) <= RESIDUAL_TOL,
        "conserved_source_zero": float(np.max(np.abs(conserved_source), initial=0.0)) <= tol,
        "conserved_rows_of_l_vanish": l_rows <= l_rows_tol,
    }
    metrics = {
        "max_a0_off_block": float(np.max(off_block)),
        "max_residual_conserved": float(np.max(np.abs(r_conserved))),
        "max_conserved_source": float(np.max(np.abs(conserved_source), initial=0.0)),
        "max_conserved_row_of_l": l_rows,
        "l21_norm": float(np.linalg.norm(lin.L[n1:, :n1])),
    }
    notes = [
        "Only the symmetrized A^0 is required to be block diagonal; "
        "the flux matrices A^j (j >= 1) keep full off-diagonal blocks."
    ]
    if metrics["l21_norm"] > RESIDUAL_TOL:
        notes.append("L21 is nonzero; the damped-mode identity assumes it vanishes.")

    flags, flag_metrics = _quadratic_structure_flags(system, lin)
    checks.update(flags)
    metrics.update(flag_metrics)

    report = StructureReport(
        passed=checks["a0_block_diagonal"] and checks["residual_vanishes_on_conserved"]
        and checks["conserved_source_zero"] and checks["conserved_rows_of_l_vanish"],
        checks=checks,
        metrics=metrics,
        notes=notes,
    )
    logger.info(f"Block structure of {system.name}: passed={report.passed}")
    return report


def _quadratic_structure_flags(system: SystemSpec, lin: LinearizedSystem):
    n, n1, Vbar = system.n, system.n1, system.equilibrium
    h1 = fd_step(float(np.max(np.abs(Vbar))))

    a11 = max(float(np.linalg.norm(_symmetrized_coeff(system, j, Vbar)[:n1, :n1]))
              for j in range(1, system.d + 1))

    d_a11, d_a21 = 0.0, 0.0
    for i in range(n1):
        step = np.zeros(n)
        step[i] = h1
        for j in range(1, system.d + 1):
            diff = (_symmetrized_coeff(system, j, Vbar + step)
                    - _symmetrized_coeff(system, j, Vbar - step)) / (2 * h1)
            d_a11 = max(d_a11, float(np.linalg.norm(diff[:n1, :n1])))
            d_a21 = max(d_a21, float(np.linalg.norm(diff[n1:, :n1])))

    def r(z):
        return system.residual(z, lin.L)

    h2 = FD_HESSIAN_STEP
    hessian = 0.0
    for i in range(n):
        for k in range(i, n):
            if i >= n1 and k >= n1:
                continue
            ei, ek = np.zeros(n), np.zeros(n)
            ei[i], ek[k] = h2, h2
            mixed = (r(ei + ek) - r(ei - ek) - r(-ei + ek) + r(-ei - ek)) / (4 * h2 * h2)
            hessian = max(hessian, float(np.max(np.abs(mixed))))

    flags = {
        "a11_vanishes": a11 <= FD_TOL,
        "d_v1_a11_vanishes": d_a11 <= FD_TOL,
        "d_v1_a21_vanishes": d_a21 <= FD_TOL,
        "residual_quadratic_in_z2": hessian <= FD_TOL,
    }
    metrics = {
        "a11_norm": a11,
        "d_v1_a11_norm": d_a11,
        "d_v1_a21_norm": d_a21,
        "residual_mixed_hessian": hessian,
    }
    return flags, metrics


# ------------------------------------------------------------
# Linear systems from matrices / JSON
# ------------------------------------------------------------

def make_linear_system(A: Sequence[np.ndarray], L: np.ndarray, n1: int,
                       equilibrium: Optional[Sequence[float]] = None,
                       S: Optional[np.ndarray] = None, name: str = "linear") -> SystemSpec:
    """Constant coefficients A^j and source H(V) = -S^-1 L (V - V-bar)."""
    A = np.asarray(A, dtype=float)
    L = np.asarray(L, dtype=float)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise DimensionMismatch(f"A must have shape (d+1, n, n), got {A.shape}")
    d, n = A.shape[0] - 1, A.shape[1]
    if L.shape != (n, n):
        raise DimensionMismatch(f"Lmat has shape {L.shape}, expected ({n}, {n})")
    Vbar = np.zeros(n) if equilibrium is None else np.asarray(equilibrium, dtype=float)
    if Vbar.shape != (n,):
        raise DimensionMismatch(f"equilibrium has shape {Vbar.shape}, expected ({n},)")
    S = np.eye(n) if S is None else np.asarray(S, dtype=float)
    if S.shape != (n, n):
        raise DimensionMismatch(f"S has shape {S.shape}, expected ({n}, {n})")
    try:
        relaxation = np.linalg.solve(S, L)
    except np.linalg.LinAlgError as e:
        raise SingularWeight(f"Symmetrizer is singular: {e}") from e

    def coeff_batch(j, states):
        return np.broadcast_to(A[j], (len(states), n, n))

    def source_batch(states):
        return -(states - Vbar) @ relaxation.T

    def symmetrizer_batch(states):
        return np.broadcast_to(S, (len(states), n, n))

    return SystemSpec(
        name=name, d=d, n=n, n1=n1,
        coeff=lambda j, V: A[j],
        source=lambda V: -relaxation @ (np.asarray(V, dtype=float) - Vbar),
        symmetrizer=lambda V: S,
        equilibrium=Vbar,
        jacobians={"source": lambda V: -L},
        coeff_batch=coeff_batch,
        source_batch=source_batch,
        symmetrizer_batch=symmetrizer_batch,
        linear=True,
    )


def load_system_json(path: Union[str, Path]) -> SystemSpec:
    """Linear system file with keys d, n, n1, A, Lmat, equilibrium and optional S."""
    path = Path(path)
    try:
        with open(path) as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SystemFileError(f"Cannot read system file {path}: {e}") from e

    missing = [key for key in ("d", "n", "n1", "A", "Lmat", "equilibrium") if key not in payload]
    if missing:
        raise SystemFileError(f"System file {path} is missing keys {missing}")

    try:
        d, n, n1 = int(payload["d"]), int(payload["n"]), int(payload["n1"])
        A = np.asarray(payload["A"], dtype=float)
        L = np.asarray(payload["Lmat"], dtype=float)
        S = np.asarray(payload["S"], dtype=float) if payload.get("S") is not None else None
    except (TypeError, ValueError) as e:
        raise SystemFileError(f"Non-numeric entries in {path}: {e}") from e

    if A.shape != (d + 1, n, n):
        raise DimensionMismatch(f"A has shape {A.shape}, expected ({d + 1}, {n}, {n})")
    system = make_linear_system(A, L, n1, payload["equilibrium"], S, name=path.stem)
    logger.info(f"Loaded linear system {path.name}: d={d}, n={n}, n1={n1}")
    return system
