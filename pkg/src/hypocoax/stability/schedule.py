"""
Corrector weights eps_0 .. eps_{n-1}.

eps_0 = (2 pi)^-d kappa0 / 2 and eps_k = eps^{m_k} for k >= 1, with the
exponents m_k = k (2n - k) unless supplied. The exponents must satisfy

    m_k     >= (m_{k-1} + m_{k+1}) / 2 + delta      for 1 <= k <= n - 2
    m_{n-1} >= (m_k + m_{n-2}) / 2 + delta          for 0 <= k <= n - 1

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

from ..errors import InvalidMargin

logger = logging.getLogger(__name__)


def default_exponents(n: int) -> Tuple[int, ...]:
    return tuple(k * (2 * n - k) for k in range(n))


def exponent_margins(exponents: Sequence[float]) -> Tuple[float, float]:
    """(midpoint margin, terminal margin); inf where the condition is empty."""
    m = list(exponents)
    n = len(m)
    midpoint = min((m[k] - 0.5 * (m[k - 1] + m[k + 1]) for k in range(1, n - 1)), default=math.inf)
    if n < 2:
        return midpoint, math.inf
    terminal = min(m[n - 1] - 0.5 * (m[k] + m[n - 2]) for k in range(n))
    return midpoint, terminal


@dataclass(frozen=True)
class EpsilonSchedule:
    n: int
    d: int
    epsilon: float
    delta: float
    kappa0: float
    exponents: Tuple[float, ...]
    values: Tuple[float, ...]

    def chain_condition_holds(self) -> bool:
        """4 eps_k^2 <= eps_{k-1} eps_{k+1} for 1 <= k <= n - 2."""
        v = self.values
        return all(4.0 * v[k] ** 2 <= v[k - 1] * v[k + 1] for k in range(1, self.n - 1))

    def with_epsilon(self, epsilon: float) -> "EpsilonSchedule":
        return make_schedule(self.n, self.d, self.kappa0, self.delta, epsilon, self.exponents)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "kappa0": self.kappa0,
            "exponents": list(self.exponents),
            "values": list(self.values),
            "chain_condition": self.chain_condition_holds(),
        }


def make_schedule(n: int, d: int, kappa0: float, delta: float = 1.0, epsilon: float = 0.1,
                  exponents: Optional[Sequence[float]] = None) -> EpsilonSchedule:
    if not (math.isfinite(kappa0) and kappa0 > 0):
        raise ValueError(f"kappa0 must be finite and positive, got {kappa0}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if delta <= 0:
        raise InvalidMargin(f"Margin must be positive, got {delta}")

    exponents = default_exponents(n) if exponents is None else tuple(exponents)
    if len(exponents) != n or exponents[0] != 0:
        raise InvalidMargin(f"Need {n} exponents starting at 0, got {exponents}")

    midpoint, terminal = exponent_margins(exponents)
    if delta > midpoint or delta > terminal:
        raise InvalidMargin(
            f"Exponents {exponents} give margins (midpoint {midpoint}, terminal {terminal}); "
            f"requested delta = {delta}"
        )

    eps0 = (2.0 * math.pi) ** (-d) * kappa0 / 2.0
    values = (eps0,) + tuple(epsilon ** m for m in exponents[1:])
    schedule = EpsilonSchedule(n=n, d=d, epsilon=float(epsilon), delta=float(delta),
                               kappa0=float(kappa0), exponents=exponents, values=values)
    if not schedule.chain_condition_holds():
        logger.debug(f"Chain condition 4 eps_k^2 <= eps_(k-1) eps_(k+1) fails at epsilon={epsilon}")
    return schedule
