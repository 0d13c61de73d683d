"""
Frequency-localized Lyapunov functionals.

For a block Z_q = Delta_q Z:

    I_q = sum_xi Z_q^* C(omega) Z_q                     (Hermitian corrector)
    L_q = ||Z_q||^2_{Abar0} + tau_q I_q,  tau_q = 2^-q (q >= 0), 2^q (q < 0)
    H_q = kappa0/2 ||N Z_q||^2 + min(1, 4^q) sum_k eps_k ||N M^k Z_q||^2

and the global functionals are weighted sums of sqrt(L_q) over q, corrected
by low-frequency norms of the damped mode W. All Plancherel sums carry the
box volume so that they are L2 quantities.

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from ..errors import CannotCertify
from ..lp.littlewood_paley import block_norms, lp_range, phi
from ..lp.spectral_field import SpectralField, SpectralGrid
from ..stability.certification import gram_tail, hermitian_corrector
from ..stability.schedule import EpsilonSchedule
from ..systems.system_model import LinearizedSystem, SystemSpec

logger = logging.getLogger(__name__)

VARIANTS = ("general", "refined")
MONOTONE_TOL = 1e-10
MAX_HALVINGS = 40


def block_scale(q: int) -> float:
    return 2.0 ** (-q) if q >= 0 else 2.0 ** q


def default_weights(kappa0: float) -> Tuple[float, float]:
    kappa0 = kappa0 if math.isfinite(kappa0) else 1.0
    return 1e-2 * kappa0, 1e-4 * kappa0 ** 2


def _quadratic(z: np.ndarray, Q: np.ndarray) -> float:
    """sum over modes of z^* Q z for z (m, n), Q (m, n, n) or (n, n)."""
    if Q.ndim == 2:
        return float(np.einsum("ma,ab,mb->", np.conj(z), Q, z).real)
    return float(np.einsum("ma,mab,mb->", np.conj(z), Q, z).real)


@dataclass
class FunctionalSnapshot:
    """Functionals at one time; the corrected ones are recomputed from the stored parts."""
    t: float
    I: Dict[int, float]
    L_blocks: Dict[int, float]
    H_blocks: Dict[int, float]
    block_energy: Dict[int, float]
    L: float
    Lprime: float
    W_terms: Dict[str, float]
    ingredients: Dict[str, float]
    eps: float
    eps_prime: float
    variant: str = "general"

    @property
    def Ltilde(self) -> float:
        return self.L + self.eps * self.W_terms["d"] + self.eps_prime * self.W_terms["dm1"]

    @property
    def Ltildeprime(self) -> float:
        return self.Lprime + self.eps * self.W_terms["dp1"] + self.eps_prime * self.W_terms["d"]

    @property
    def Htilde(self) -> float:
        g = self.ingredients
        return g["Z_all_dp1"] + self.eps * g["W_low_d"] + self.eps_prime * g["W_low_dm1"]

    @property
    def Htildeprime(self) -> float:
        g = self.ingredients
        return (g["Z1_low_dp2"] + g["Z2_low_dp1"] + g["Z_high_dp1"]
                + self.eps * g["W_low_dp1"] + self.eps_prime * g["W_low_d"])

    def reweighted(self, eps: float, eps_prime: float) -> "FunctionalSnapshot":
        return replace(self, eps=eps, eps_prime=eps_prime)

    def max_corrector_ratio(self) -> float:
        """max_q |I_q| / ||Z_q||^2 over nonzero blocks."""
        ratios = [abs(self.I[q]) / e for q, e in self.block_energy.items() if e > 0]
        return max(ratios, default=0.0)

    def row(self) -> Dict[str, float]:
        return {
            "L": self.L,
            "Ltilde": self.Ltilde,
            "Lprime": self.Lprime,
            "Ltildeprime": self.Ltildeprime,
            "Htilde": self.Htilde if self.variant == "general" else self.Htildeprime,
        }


class FunctionalEvaluator:
    """Per-mode matrices and dyadic supports for one grid, reused across snapshots."""

    def __init__(self, lin: LinearizedSystem, schedule: EpsilonSchedule,
                 grid: SpectralGrid, system: Optional[SystemSpec] = None):
        self.lin = lin
        self.schedule = schedule
        self.grid = grid
        self.system = system
        self.kappa0 = schedule.kappa0
        self.q_min, self.q_max = lp_range(grid)

        magnitude = grid.magnitude.reshape(-1)
        xi = grid.xi.reshape(grid.d, -1).T
        omega = np.divide(xi, magnitude[:, None], out=np.zeros_like(xi), where=magnitude[:, None] > 0)
        M_batch = lin.M_batch(omega)
        self.corrector = hermitian_corrector(lin, schedule.values, M_batch)
        self.tail = gram_tail(lin, schedule.values, M_batch)
        self.NtN = lin.N.T @ lin.N

        self.support: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        for q in range(self.q_min, self.q_max + 1):
            weights = phi(magnitude * 2.0 ** (-q))
            idx = np.nonzero(weights > 0)[0]
            self.support[q] = (idx, weights[idx])

    @classmethod
    def for_field(cls, field_: SpectralField, lin: LinearizedSystem, schedule: EpsilonSchedule,
                  system: Optional[SystemSpec] = None) -> "FunctionalEvaluator":
        return cls(lin, schedule, field_.grid, system)

    @property
    def blocks(self) -> range:
        return range(self.q_min, self.q_max + 1)

    def _flat(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs.reshape(coeffs.shape[0], -1).T

    def _block(self, flat: np.ndarray, q: int) -> Tuple[np.ndarray, np.ndarray]:
        if q not in self.support:
            return np.empty(0, dtype=int), np.empty((0, flat.shape[1]), dtype=complex)
        idx, weights = self.support[q]
        return idx, flat[idx] * weights[:, None]

    # -- block quantities ----------------------------------------------------

    def corrector_of_block(self, block_coeffs: np.ndarray) -> float:
        flat = self._flat(block_coeffs)
        return self.grid.volume * _quadratic(flat, self.corrector)

    def weight_field(self, V: np.ndarray) -> np.ndarray:
        """S(V) A^0(V) at every grid point, V of shape (n, *resolution)."""
        states = V.reshape(V.shape[0], -1).T
        return self.system.symmetrizer_at(states) @ self.system.coeff_at(0, states)

    def _physical_energy(self, idx: np.ndarray, zq: np.ndarray, weight: np.ndarray) -> float:
        n = zq.shape[1]
        full = np.zeros((self.grid.size, n), dtype=complex)
        full[idx] = zq
        values = self.grid.to_physical(full.T.reshape((n,) + self.grid.resolution))
        points = values.reshape(n, -1).T
        return self.grid.volume * float(np.mean(np.einsum("pa,pab,pb->p", points, weight, points)))

    def block_terms(self, coeffs: np.ndarray, q: int,
                    weight: Optional[np.ndarray] = None) -> Tuple[float, float, float]:
        """(I_q, L_q, H_q) for the field with coefficients `coeffs`."""
        idx, zq = self._block(self._flat(coeffs), q)
        if idx.size == 0:
            return 0.0, 0.0, 0.0
        vol = self.grid.volume
        I_q = vol * _quadratic(zq, self.corrector[idx])
        if weight is not None and q >= 0:
            energy = self._physical_energy(idx, zq, weight)
        else:
            energy = vol * _quadratic(zq, self.lin.A0)
        L_q = energy + block_scale(q) * I_q
        H_q = (0.5 * self.kappa0 * vol * _quadratic(zq, self.NtN)
               + min(1.0, 4.0 ** q) * vol * _quadratic(zq, self.tail[idx]))
        return I_q, L_q, H_q

    def low_weighted_norms(self, W: SpectralField) -> Dict[int, float]:
        """||Delta_q W||_{L2 weighted by Abar0_22} for q < 0."""
        A22 = self.lin.A0[self.lin.n1:, self.lin.n1:]
        flat = self._flat(W.coeffs)
        out = {}
        for q in range(self.q_min, 0):
            idx, wq = self._block(flat, q)
            out[q] = math.sqrt(max(0.0, self.grid.volume * _quadratic(wq, A22))) if idx.size else 0.0
        return out

    # -- global functionals ----------------------------------------------------

    def snapshot(self, Z: SpectralField, W: SpectralField, t: float = 0.0,
                 V: Optional[np.ndarray] = None, eps: Optional[float] = None,
                 eps_prime: Optional[float] = None, variant: str = "general") -> FunctionalSnapshot:
        if variant not in VARIANTS:
            raise ValueError(f"Unknown variant {variant!r}; expected one of {VARIANTS}")
        d_eps, d_eps_prime = default_weights(self.kappa0)
        half = self.grid.d / 2.0

        weight = self.weight_field(V) if (V is not None and self.system is not None) else None
        flat = self._flat(Z.coeffs)
        I, L_blocks, H_blocks, energy = {}, {}, {}, {}
        for q in self.blocks:
            I[q], L_blocks[q], H_blocks[q] = self.block_terms(Z.coeffs, q, weight)
            idx, zq = self._block(flat, q)
            energy[q] = self.grid.volume * float(np.sum(np.abs(zq) ** 2)) if idx.size else 0.0

        def weighted_sum(low_exp, high_exp):
            return math.fsum(2.0 ** (q * (low_exp if q < 0 else high_exp)) * math.sqrt(max(0.0, L_blocks[q]))
                             for q in sorted(L_blocks))

        w_low = self.low_weighted_norms(W)
        W_terms = {
            key: math.fsum(2.0 ** (q * s) * w_low[q] for q in sorted(w_low))
            for key, s in (("dm1", half - 1.0), ("d", half), ("dp1", half + 1.0))
        }
        return FunctionalSnapshot(
            t=float(t), I=I, L_blocks=L_blocks, H_blocks=H_blocks, block_energy=energy,
            L=weighted_sum(half - 1.0, half + 1.0),
            Lprime=weighted_sum(half, half + 1.0),
            W_terms=W_terms,
            ingredients=energy_ingredients(Z, W, self.lin.n1),
            eps=d_eps if eps is None else eps,
            eps_prime=d_eps_prime if eps_prime is None else eps_prime,
            variant=variant,
        )


def _band(norms: Dict[int, float], s: float, low: bool, threshold: int = 0) -> float:
    return math.fsum(2.0 ** (q * s) * v for q, v in sorted(norms.items()) if (q <= threshold) == low)


def energy_ingredients(Z: SpectralField, W: SpectralField, n1: int, threshold: int = 0) -> Dict[str, float]:
    """Hybrid norms of Z, Z1, Z2 and W, low band q <= threshold."""
    half = Z.d / 2.0
    z = block_norms(Z)
    z1 = block_norms(Z.components(0, n1)) if n1 else {q: 0.0 for q in z}
    z2 = block_norms(Z.components(n1))
    w = block_norms(W)
    return {
        "Z_low_dm1": _band(z, half - 1.0, True, threshold),
        "Z_low_d": _band(z, half, True, threshold),
        "Z_high_dp1": _band(z, half + 1.0, False, threshold),
        "Z_all_dp1": math.fsum(2.0 ** (q * (half + 1.0)) * v for q, v in sorted(z.items())),
        "Z1_low_dp2": _band(z1, half + 2.0, True, threshold),
        "Z2_low_dm1": _band(z2, half - 1.0, True, threshold),
        "Z2_low_d": _band(z2, half, True, threshold),
        "Z2_low_dp1": _band(z2, half + 1.0, True, threshold),
        "W_low_dm1": _band(w, half - 1.0, True, threshold),
        "W_low_d": _band(w, half, True, threshold),
        "W_low_dp1": _band(w, half + 1.0, True, threshold),
    }


# ------------------------------------------------------------
# Single-call wrappers
# ------------------------------------------------------------

def corrector_Iq(field_block: SpectralField, lin: LinearizedSystem, schedule: EpsilonSchedule, q: int) -> float:
    """I_q of an already localized block Delta_q Z."""
    evaluator = FunctionalEvaluator.for_field(field_block, lin, schedule)
    return evaluator.corrector_of_block(field_block.coeffs)


def block_functional_Lq(Z: SpectralField, V: Optional[np.ndarray], lin: LinearizedSystem,
                        schedule: EpsilonSchedule, q: int, system: Optional[SystemSpec] = None) -> float:
    evaluator = FunctionalEvaluator.for_field(Z, lin, schedule, system)
    weight = evaluator.weight_field(V) if (V is not None and system is not None) else None
    return evaluator.block_terms(Z.coeffs, q, weight)[1]


def dissipation_Hq(Z: SpectralField, lin: LinearizedSystem, schedule: EpsilonSchedule, q: int) -> float:
    evaluator = FunctionalEvaluator.for_field(Z, lin, schedule)
    return evaluator.block_terms(Z.coeffs, q)[2]


def global_functionals(Z: SpectralField, V: Optional[np.ndarray], W: SpectralField,
                       lin: LinearizedSystem, schedule: EpsilonSchedule,
                       eps: Optional[float] = None, eps_prime: Optional[float] = None,
                       variant: str = "general", system: Optional[SystemSpec] = None,
                       t: float = 0.0) -> FunctionalSnapshot:
    evaluator = FunctionalEvaluator.for_field(Z, lin, schedule, system)
    return evaluator.snapshot(Z, W, t=t, V=V, eps=eps, eps_prime=eps_prime, variant=variant)


# ------------------------------------------------------------
# Along trajectories
# ------------------------------------------------------------

def time_derivative(times: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """Second-order finite differences on a possibly non-uniform time grid."""
    return np.gradient(np.asarray(values, dtype=float), np.asarray(times, dtype=float), edge_order=2)


@dataclass
class WeightTuning:
    eps: float
    eps_prime: float
    halvings: int
    max_increase: float


def corrected_series(snapshots: List[FunctionalSnapshot], variant: str = "general") -> np.ndarray:
    if variant == "general":
        return np.array([s.Ltilde for s in snapshots])
    return np.array([s.Ltildeprime for s in snapshots])


def tune_functional_weights(snapshots: List[FunctionalSnapshot], kappa0: float,
                            eps: Optional[float] = None, eps_prime: Optional[float] = None,
                            variant: str = "general",
                            max_halvings: int = MAX_HALVINGS) -> WeightTuning:
    """Halve (eps, eps') until the corrected functional is nonincreasing on the snapshots."""
    d_eps, d_eps_prime = default_weights(kappa0)
    eps = d_eps if eps is None else eps
    eps_prime = d_eps_prime if eps_prime is None else eps_prime
    if not snapshots:
        return WeightTuning(eps, eps_prime, 0, 0.0)

    increase = math.inf
    for halvings in range(max_halvings + 1):
        values = corrected_series([s.reweighted(eps, eps_prime) for s in snapshots], variant)
        increase = float(np.max(np.diff(values), initial=0.0))
        if increase <= MONOTONE_TOL * values[0]:
            logger.info(f"Functional weights eps={eps:.3e}, eps'={eps_prime:.3e} after {halvings} halvings")
            return WeightTuning(eps, eps_prime, halvings, increase)
        eps, eps_prime = 0.5 * eps, 0.5 * eps_prime

    raise CannotCertify(
        f"Corrected functional not monotone after {max_halvings} halvings",
        diagnostics={"eps": eps, "eps_prime": eps_prime, "max_increase": increase},
    )


def running_energy(times: Sequence[float], ingredients: pd.DataFrame, variant: str = "general") -> pd.Series:
    """Z(t) (general) or Z'(t) (refined): running sups plus time integrals of hybrid norms."""
    t = np.asarray(times, dtype=float)

    def sup(col):
        return np.maximum.accumulate(ingredients[col].to_numpy())

    def integral(col):
        return cumulative_trapezoid(ingredients[col].to_numpy(), t, initial=0.0)

    def l2(col):
        return np.sqrt(cumulative_trapezoid(ingredients[col].to_numpy() ** 2, t, initial=0.0))

    if variant == "general":
        total = (sup("Z_low_dm1") + sup("Z_high_dp1") + integral("Z_all_dp1")
                 + integral("W_low_dm1") + integral("Z2_low_d") + l2("Z2_low_dm1"))
    elif variant == "refined":
        total = (sup("Z_low_d") + sup("Z_high_dp1") + integral("Z1_low_dp2") + integral("Z2_low_dp1")
                 + l2("Z2_low_d") + integral("Z_high_dp1") + integral("W_low_d"))
    else:
        raise ValueError(f"Unknown variant {variant!r}; expected one of {VARIANTS}")
    return pd.Series(total, index=ingredients.index, name="Z" if variant == "general" else "Zprime")
