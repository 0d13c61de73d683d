"""
Littlewood-Paley decomposition and homogeneous Besov semi-norms on the box.

The cutoff chi equals 1 on [0, 3/4], 0 on [4/3, inf) and is glued in between
with the exp(-1/s) mollifier; phi(t) = chi(t/2) - chi(t) gives the dyadic
blocks Delta_q = phi(2^-q |D|). Block norms are Euclidean over components.

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..errors import UnresolvedBand
from .spectral_field import SpectralField, SpectralGrid

logger = logging.getLogger(__name__)

CHI_PLATEAU = 0.75
CHI_CUTOFF = 4.0 / 3.0

BANDS = ("all", "low", "high", "low-lambda", "high-lambda")


def _mollifier(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    positive = s > 0
    out[positive] = np.exp(-1.0 / s[positive])
    return out


def chi(t):
    """Smooth radial cutoff, 1 below 3/4 and 0 above 4/3."""
    arr = np.asarray(t, dtype=float)
    left = _mollifier(CHI_CUTOFF - arr)
    right = _mollifier(arr - CHI_PLATEAU)
    denom = left + right
    ratio = np.divide(left, denom, out=np.zeros_like(arr), where=denom > 0)
    value = np.where(arr <= CHI_PLATEAU, 1.0, np.where(arr >= CHI_CUTOFF, 0.0, ratio))
    return float(value) if np.ndim(t) == 0 else value


def phi(t):
    """Dyadic annulus function, supported in 3/4 < t < 8/3."""
    arr = np.asarray(t, dtype=float)
    value = chi(arr / 2.0) - chi(arr)
    return float(value) if np.ndim(t) == 0 else value


def partition_sum(xi_magnitude, q_min: int, q_max: int):
    """Sum of phi(2^-q xi) over q_min..q_max."""
    arr = np.asarray(xi_magnitude, dtype=float)
    total = np.zeros_like(arr)
    for q in range(q_min, q_max + 1):
        total = total + phi(arr * 2.0 ** (-q))
    return float(total) if np.ndim(xi_magnitude) == 0 else total


def lp_range(grid: Union[SpectralGrid, SpectralField]) -> Tuple[int, int]:
    """Resolvable block indices [q_min, q_max] of a grid."""
    if isinstance(grid, SpectralField):
        grid = grid.grid
    xi_min = 2.0 * np.pi / max(grid.box_length)
    xi_max = float(np.max(grid.magnitude))
    q_min = math.floor(math.log2(xi_min)) - 1
    q_max = math.ceil(math.log2(xi_max)) + 1
    return q_min, q_max


def dyadic_multiplier(grid: SpectralGrid, q: int) -> np.ndarray:
    return phi(grid.magnitude * 2.0 ** (-q))


def dyadic_block(field_: SpectralField, q: int) -> SpectralField:
    """Delta_q applied to every component; zero outside the resolvable range."""
    q_min, q_max = lp_range(field_)
    if q < q_min or q > q_max:
        return field_.with_coeffs(np.zeros_like(field_.coeffs))
    return field_.with_coeffs(field_.coeffs * dyadic_multiplier(field_.grid, q))


def block_norms(field_: SpectralField) -> Dict[int, float]:
    """||Delta_q z||_{L2} for every resolvable q."""
    grid = field_.grid
    energy = np.sum(np.abs(field_.coeffs) ** 2, axis=0)
    q_min, q_max = lp_range(grid)
    norms = {}
    for q in range(q_min, q_max + 1):
        weight = dyadic_multiplier(grid, q) ** 2
        norms[q] = float(np.sqrt(grid.volume * np.sum(weight * energy)))
    return norms


@dataclass(frozen=True)
class BesovQuery:
    """Regularity s, summation exponent r, and a frequency band."""
    s: float
    r: float = 1.0
    band: str = "all"
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.r not in (1.0, math.inf):
            raise ValueError(f"Summation exponent must be 1 or inf, got {self.r}")
        if self.band not in BANDS:
            raise ValueError(f"Unknown band {self.band!r}; expected one of {BANDS}")

    @property
    def effective_threshold(self) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        return 1.0 if self.band.endswith("lambda") else 0.0

    def includes(self, q: int) -> bool:
        if self.band == "all":
            return True
        level = self.effective_threshold
        if self.band == "low":
            return q <= level
        if self.band == "high":
            return q > level
        if self.band == "low-lambda":
            return 2.0 ** q <= level
        return 2.0 ** q > level

    @property
    def key(self) -> str:
        text = f"{self.band}_s{self.s:g}"
        if self.threshold is not None:
            text += f"_t{self.threshold:g}"
        if self.r == math.inf:
            text += "_rinf"
        return text


def _combine(norms: Dict[int, float], query: BesovQuery) -> Tuple[float, Dict[int, float]]:
    weighted = {q: 2.0 ** (q * query.s) * value for q, value in norms.items() if query.includes(q)}
    if not weighted:
        raise UnresolvedBand(
            f"Band {query.band!r} (threshold {query.effective_threshold:g}) has no resolvable "
            f"block in [{min(norms)}, {max(norms)}]"
        )
    ordered = [weighted[q] for q in sorted(weighted)]
    value = max(ordered) if query.r == math.inf else math.fsum(ordered)
    return float(value), weighted


def besov_norm(field_: SpectralField, query: BesovQuery) -> float:
    value, _ = _combine(block_norms(field_), query)
    return value


@dataclass
class BesovReport:
    values: Dict[str, float]
    block_norms: Dict[int, float]
    weighted: Dict[str, Dict[int, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "values": self.values,
            "block_norms": {str(q): v for q, v in self.block_norms.items()},
            "weighted": {k: {str(q): v for q, v in blocks.items()} for k, blocks in self.weighted.items()},
        }


def besov_report(field_: SpectralField, queries: Iterable[BesovQuery]) -> BesovReport:
    norms = block_norms(field_)
    report = BesovReport(values={}, block_norms=norms)
    for query in queries:
        value, weighted = _combine(norms, query)
        report.values[query.key] = value
        report.weighted[query.key] = weighted
    return report


def hybrid_threshold_norms(field_: SpectralField, s_low: float, s_high: float,
                           threshold: Optional[float] = None,
                           lam: Optional[float] = None) -> Tuple[float, float]:
    """Low part at regularity s_low and high part at s_high, r = 1."""
    if lam is not None:
        low = BesovQuery(s_low, 1.0, "low-lambda", lam)
        high = BesovQuery(s_high, 1.0, "high-lambda", lam)
    else:
        low = BesovQuery(s_low, 1.0, "low", threshold)
        high = BesovQuery(s_high, 1.0, "high", threshold)
    norms = block_norms(field_)
    return _combine(norms, low)[0], _combine(norms, high)[0]


