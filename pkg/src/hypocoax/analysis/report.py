"""
Run reports: trajectory.csv, energy.csv, report.json and optional
trajectory.parquet and LPF1 snapshots.

Author: Hypocoax Team
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..lp.field_io import write_lpf1
from ..lp.spectral_field import SpectralField
from .decay_fit import DecayFit
from .trajectory import TrajectoryRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def __str__(self) -> str:
        return f"{self.name}: {self.status}"


@dataclass
class FitEntry:
    """A fitted exponent next to its prediction."""
    fit: DecayFit
    theory: Optional[float] = None
    branch: Optional[str] = None

    @property
    def rel_error(self) -> Optional[float]:
        if self.theory is None or self.theory == 0:
            return None
        return abs(self.fit.exponent - self.theory) / abs(self.theory)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "column": self.fit.column,
            "exponent": self.fit.exponent,
            "theory": self.theory,
            "rel_error": self.rel_error,
            "branch": self.branch,
            "r_squared": self.fit.r_squared,
            "reliable": self.fit.reliable,
            "kind": self.fit.kind,
            "window": list(self.fit.window),
        }


@dataclass
class RunReport:
    config: Dict[str, Any]
    record: Optional[TrajectoryRecord] = None
    fits: List[FitEntry] = field(default_factory=list)
    verdicts: List[Verdict] = field(default_factory=list)
    sk: Optional[Dict[str, Any]] = None
    c_min: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "config": self.config,
            "sk": self.sk,
            "c_min": self.c_min,
            "fits": [f.to_dict() for f in self.fits],
            "verdicts": {v.name: v.status for v in self.verdicts},
            "verdict_details": {v.name: v.detail for v in self.verdicts},
            "passed": self.passed,
        }
        if self.record is not None:
            out["metadata"] = self.record.metadata
        out.update(self.extra)
        return out


def json_safe(value):
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_report(report: RunReport, out_dir, parquet: bool = False,
                 snapshots: Sequence[SpectralField] = (), snapshot_times: Sequence[float] = ()) -> Dict[str, Path]:
    """Write every artifact of a run into out_dir and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}

    if report.record is not None:
        paths["trajectory"] = out_dir / "trajectory.csv"
        report.record.frame.to_csv(paths["trajectory"], index=False, float_format=FLOAT_FORMAT)
        if not report.record.energy.empty:
            paths["energy"] = out_dir / "energy.csv"
            report.record.energy.to_csv(paths["energy"], index=False, float_format=FLOAT_FORMAT)
        if parquet:
            paths["parquet"] = out_dir / "trajectory.parquet"
            report.record.frame.to_parquet(paths["parquet"], engine="pyarrow", index=False)

    for index, (t, field_) in enumerate(zip(snapshot_times, snapshots)):
        path = write_lpf1(field_, out_dir / "snapshots" / f"Z_{index:04d}.lpf1")
        paths[f"snapshot_{index:04d}"] = path
        logger.debug(f"Snapshot t={t:g} -> {path}")

    paths["report"] = out_dir / "report.json"
    with open(paths["report"], "w") as f:
        json.dump(json_safe(report.to_dict()), f, indent=2)

    status = ", ".join(str(v) for v in report.verdicts) or "no verdicts"
    logger.info(f"Report written to {out_dir} ({status})")
    return paths
