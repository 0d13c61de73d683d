"""
Predicted decay exponents for data in Bdot^(-sigma1)_(2,inf).

General statement (solutions small in the d/2 - 1 / d/2 + 1 hybrid norm):

    ||Z||_low(s)   ~ <t>^-(s + sigma1)/2           for -sigma1 < s <= d/2 - 1
    ||Z2||_low(s)  ~ <t>^-((s + sigma1)/2 + 1/2)   for -sigma1 < s <= d/2 - 2
    ||Z2||_low(s)  ~ <t>^-alpha1                   for min(d/2 - 2, -sigma1) < s <= d/2 - 1
    ||Z||_high     ~ <t>^-2 alpha1,                alpha1 = (sigma1 + d/2 - 1)/2

The refined statement shifts every upper bound by one and uses
alpha1' = (sigma1 + d/2)/2. Where two Z2 ranges overlap both are reported.

Author: Hypocoax Team
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

from ..errors import OutOfRange

VARIANTS = ("general", "refined")


@dataclass
class ExponentBranch:
    quantity: str
    exponent: float
    branch: str
    condition: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExponentTable:
    d: int
    sigma1: float
    sigma: float
    variant: str
    alpha1: float
    branches: List[ExponentBranch] = field(default_factory=list)

    def get(self, quantity: str) -> List[ExponentBranch]:
        return [b for b in self.branches if b.quantity == quantity]

    def exponent(self, quantity: str) -> float:
        """Best (largest) predicted exponent for a quantity."""
        matches = self.get(quantity)
        if not matches:
            raise KeyError(f"No prediction for {quantity!r}")
        return max(b.exponent for b in matches)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d, "sigma1": self.sigma1, "sigma": self.sigma,
            "variant": self.variant, "alpha1": self.alpha1,
            "branches": [b.to_dict() for b in self.branches],
        }


def theory_exponents(d: int, sigma1: float, sigma: float, variant: str = "general") -> ExponentTable:
    if variant not in VARIANTS:
        raise ValueError(f"Unknown variant {variant!r}; expected one of {VARIANTS}")
    half = d / 2.0
    if not -half < sigma1 <= half:
        raise OutOfRange(f"-d/2 < sigma1 <= d/2 fails for sigma1 = {sigma1}, d = {d}")

    shift = 0.0 if variant == "general" else 1.0
    top = half - 1.0 + shift
    z2_top = half - 2.0 + shift
    alpha1 = (sigma1 + half - 1.0 + shift) / 2.0

    if not -sigma1 < top:
        raise OutOfRange(f"-sigma1 < d/2 - 1{' + 1' if shift else ''} fails for sigma1 = {sigma1}: empty range")
    if not -sigma1 < sigma:
        raise OutOfRange(f"-sigma1 < sigma fails for sigma = {sigma}, sigma1 = {sigma1}")
    if not sigma <= top:
        raise OutOfRange(f"sigma <= {top:g} fails for sigma = {sigma}")

    table = ExponentTable(d=d, sigma1=sigma1, sigma=sigma, variant=variant, alpha1=alpha1)
    table.branches.append(ExponentBranch("Z_low", (sigma + sigma1) / 2.0, "heat",
                                         f"-sigma1 < sigma <= {top:g}"))
    if sigma <= z2_top:
        table.branches.append(ExponentBranch("Z2_low", (sigma + sigma1) / 2.0 + 0.5, "heat",
                                             f"-sigma1 < sigma <= {z2_top:g}"))
    if min(z2_top, -sigma1) < sigma:
        table.branches.append(ExponentBranch("Z2_low", alpha1, "alpha1",
                                             f"min({z2_top:g}, -sigma1) < sigma <= {top:g}"))
    table.branches.append(ExponentBranch("Z_high", 2.0 * alpha1, "alpha1", "all sigma in range"))
    return table
