"""
Built-in systems and lookup of system references.

A reference is either a registry key or a path to a linear-system JSON file.

Author: Hypocoax Team
"""

import logging
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List

from ..errors import UnknownSystem
from ..simulator.euler import make_euler_system
from .system_model import SystemSpec, load_system_json

logger = logging.getLogger(__name__)

REGISTRY: Dict[str, Callable[..., SystemSpec]] = {
    "euler-damped-1d": partial(make_euler_system, 1),
    "euler-damped-2d": partial(make_euler_system, 2),
}


def available_systems() -> List[str]:
    return sorted(REGISTRY)


def get_system(key: str, gamma: float = 2.0, lam: float = 1.0) -> SystemSpec:
    if key not in REGISTRY:
        raise UnknownSystem(f"Unknown system {key!r}; available: {available_systems()}")
    return REGISTRY[key](gamma=gamma, lam=lam)


def resolve_system(ref: str, gamma: float = 2.0, lam: float = 1.0) -> SystemSpec:
    if ref in REGISTRY:
        return get_system(ref, gamma=gamma, lam=lam)
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        return load_system_json(path)
    raise UnknownSystem(f"{ref!r} is neither a built-in system nor an existing JSON file")
