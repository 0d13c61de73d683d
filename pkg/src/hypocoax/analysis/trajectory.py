"""
Per-snapshot norms and functionals of a run, as pandas tables.

Author: Hypocoax Team
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..lp.littlewood_paley import besov_norm
from ..lp.spectral_field import SpectralField
from ..lyapunov.damped_mode import damped_mode, linear_damped_mode
from ..lyapunov.functionals import FunctionalEvaluator, FunctionalSnapshot, running_energy
from ..simulator.run_config import QuerySpec
from ..stability.schedule import EpsilonSchedule
from ..systems.system_model import LinearizedSystem, SystemSpec

logger = logging.getLogger(__name__)

FUNCTIONAL_COLUMNS = ["L", "Ltilde", "Lprime", "Ltildeprime", "Htilde"]


@dataclass
class TrajectoryRecord:
    """Time series of one run: `frame` is the trajectory.csv contract, `energy` the hybrid-norm ingredients."""
    frame: pd.DataFrame
    energy: pd.DataFrame = field(default_factory=pd.DataFrame)
    snapshots: List[FunctionalSnapshot] = field(default_factory=list)
    query_columns: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        times = self.frame["t"].to_numpy()
        if np.any(np.diff(times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")
        if self.frame.isna().to_numpy().any():
            logger.warning("Trajectory contains NaN entries")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> "TrajectoryRecord":
        return cls(frame=frame.reset_index(drop=True), query_columns=[c for c in frame.columns if c != "t"],
                   metadata=dict(metadata or {}))

    @property
    def times(self) -> np.ndarray:
        return self.frame["t"].to_numpy()

    def column(self, name: str) -> pd.Series:
        if name not in self.frame.columns:
            raise KeyError(f"No column {name!r}; available: {list(self.frame.columns)}")
        return self.frame[name]

    def reweight(self, eps: float, eps_prime: float) -> "TrajectoryRecord":
        """Recompute the corrected functionals with new damped-mode weights."""
        self.snapshots = [s.reweighted(eps, eps_prime) for s in self.snapshots]
        rows = pd.DataFrame([s.row() for s in self.snapshots])
        for name in FUNCTIONAL_COLUMNS:
            self.frame[name] = rows[name].to_numpy()
        self.metadata["functional_weights"] = {"eps": eps, "eps_prime": eps_prime}
        return self


def _target(Z: SpectralField, W: SpectralField, n1: int, target: str) -> SpectralField:
    if target == "Z":
        return Z
    if target == "Z1":
        return Z.components(0, n1)
    if target == "Z2":
        return Z.components(n1)
    return W


def record_trajectory(times: Sequence[float], fields: Sequence[SpectralField],
                      lin: LinearizedSystem, schedule: EpsilonSchedule,
                      queries: Sequence[QuerySpec] = (), system: Optional[SystemSpec] = None,
                      linear: bool = True, variant: str = "general",
                      metadata: Optional[Dict[str, Any]] = None) -> TrajectoryRecord:
    """
    Evaluate the queried Besov norms and the functionals at every snapshot.

    With `linear` the damped mode and the functional weight are those of the
    constant-coefficient system; otherwise they use the state V = Vbar + Z.
    """
    if len(times) != len(fields):
        raise ValueError(f"{len(times)} times but {len(fields)} fields")
    if not fields:
        raise ValueError("Cannot record an empty trajectory")

    evaluator = FunctionalEvaluator(lin, schedule, fields[0].grid, None if linear else system)
    rows, energy_rows, snapshots = [], [], []
    for t, Z in zip(times, fields):
        W = linear_damped_mode(Z, lin) if linear else damped_mode(Z, system, lin)
        V = None
        if not linear:
            V = Z.to_physical() + system.equilibrium.reshape((-1,) + (1,) * Z.d)

        row = {"t": float(t)}
        for query in queries:
            row[query.column] = besov_norm(_target(Z, W, lin.n1, query.target), query.to_query())
        snapshot = evaluator.snapshot(Z, W, t=t, V=V, variant=variant)
        row.update(snapshot.row())
        rows.append(row)
        energy_rows.append({"t": float(t), **snapshot.ingredients})
        snapshots.append(snapshot)

    columns = ["t"] + [q.column for q in queries] + FUNCTIONAL_COLUMNS
    frame = pd.DataFrame(rows, columns=columns)
    energy = pd.DataFrame(energy_rows)
    energy["Z"] = running_energy(energy["t"], energy, "general").to_numpy()
    energy["Zprime"] = running_energy(energy["t"], energy, "refined").to_numpy()

    logger.info(f"Recorded {len(frame)} snapshots, {len(queries)} queries")
    return TrajectoryRecord(frame=frame, energy=energy, snapshots=snapshots,
                            query_columns=[q.column for q in queries], metadata=dict(metadata or {}))
