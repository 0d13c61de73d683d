"""
Error hierarchy for hypocoax.

Every failure the library raises on purpose derives from HypocoaxError so that
the CLI and the HTTP service can tell expected numerical verdicts apart from
programming errors.

Author: Hypocoax Team
"""

from typing import Any, Dict, Optional


class HypocoaxError(Exception):
    """Base class for all hypocoax errors."""


# ------------------------------------------------------------
# System model
# ------------------------------------------------------------

class StructureError(HypocoaxError):
    """A structural hypothesis of the system fails at the equilibrium."""


class NotEquilibrium(StructureError):
    """The source does not vanish at the declared equilibrium."""


class SingularWeight(StructureError):
    """The symmetrized time coefficient is not symmetric positive definite."""


class NonSymmetric(StructureError):
    """A symmetrized flux matrix fails the symmetry tolerance."""


class SingularBlock(StructureError):
    """The dissipative block of the linearized source is not invertible."""


class DimensionMismatch(HypocoaxError, ValueError):
    """Array shapes disagree with the declared system dimensions."""


class InvalidDirection(HypocoaxError, ValueError):
    """A frequency direction is not a unit vector."""


class UnknownSystem(HypocoaxError, KeyError):
    """Registry lookup failed."""


class SystemFileError(HypocoaxError, ValueError):
    """A system JSON file or LPF1 field file is malformed."""


# ------------------------------------------------------------
# Stability
# ------------------------------------------------------------

class InvalidMargin(HypocoaxError, ValueError):
    """The requested schedule margin exceeds what the exponents provide."""


class WeightNotPositive(HypocoaxError):
    """The frequency weight P lost positivity somewhere on the grid."""


class CannotCertify(HypocoaxError):
    """Bisection on the schedule parameter never certified the generator."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ------------------------------------------------------------
# Littlewood-Paley, simulation, analysis
# ------------------------------------------------------------

class UnresolvedBand(HypocoaxError, ValueError):
    """The requested frequency band lies outside the resolvable range."""


class QuadratureFailure(HypocoaxError):
    """Adaptive radial quadrature exhausted its subdivision limit."""


class CoefficientSingular(HypocoaxError):
    """A^0(V) stopped being invertible at some grid point."""


class BlowupSuspected(HypocoaxError):
    """The solution grew beyond the allowed factor or left the neighbourhood."""


class InvalidGamma(HypocoaxError, ValueError):
    """Adiabatic exponent below one."""


class DegenerateWindow(HypocoaxError, ValueError):
    """Too few or non-positive samples in a fit window."""


class OutOfRange(HypocoaxError, ValueError):
    """Regularity index outside the range of a decay statement."""
