"""
Hypocoax: hypocoercivity certification, Littlewood-Paley analysis and
decay verification for partially dissipative hyperbolic systems.

Author: Hypocoax Team
"""

__version__ = "1.0.0"
