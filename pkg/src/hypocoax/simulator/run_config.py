"""
Run configuration models.

A run is described by a JSON document validated with pydantic. The same
models drive the CLI (`simulate`, `decay`, `analyze`), campaigns and the
HTTP service.

Author: Hypocoax Team
"""

import hashlib
import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..lp.littlewood_paley import BANDS, BesovQuery
from ..lp.spectral_field import is_power_of_two

MODES = ("linear-exact", "linear-oracle", "nonlinear")
DEFAULT_BOX = 2.0 * math.pi * 2 ** 7


# ============================================================
# QUERIES AND INITIAL DATA
# ============================================================

class QuerySpec(BaseModel):
    """A Besov semi-norm to record on one part of the solution."""
    s: float = Field(..., description="Regularity index")
    r: Union[float, Literal["inf"]] = Field(1.0, description="Summation exponent, 1 or 'inf'")
    band: str = Field("all", description=f"One of {BANDS}")
    threshold: Optional[float] = Field(None, description="Band threshold (q level, or lambda for *-lambda bands)")
    target: Literal["Z", "Z1", "Z2", "W"] = Field("Z", description="Which field the norm is taken of")

    @field_validator("band")
    @classmethod
    def known_band(cls, value: str) -> str:
        if value not in BANDS:
            raise ValueError(f"Unknown band {value!r}; expected one of {BANDS}")
        return value

    @field_validator("r")
    @classmethod
    def summation_exponent(cls, value):
        if value == "inf" or value == math.inf:
            return math.inf
        if float(value) != 1.0:
            raise ValueError(f"Summation exponent must be 1 or 'inf', got {value}")
        return 1.0

    def to_query(self) -> BesovQuery:
        return BesovQuery(s=self.s, r=self.r, band=self.band, threshold=self.threshold)

    @property
    def column(self) -> str:
        return f"{self.target}_{self.to_query().key}"


class InitialDatum(BaseModel):
    """Initial perturbation Z0 of the equilibrium."""
    kind: Literal["gaussian", "random-band", "single-mode", "file"] = "gaussian"
    amplitude: float = Field(1e-2, gt=0, description="Peak value (gaussian, single-mode) or L2 norm (random-band)")
    width: float = Field(16.0, gt=0, description="Gaussian standard deviation in box units")
    band: Tuple[int, int] = Field((-3, 0), description="Dyadic band [q_a, q_b] for random-band data")
    components: Optional[List[int]] = Field(None, description="Excited components; default all")
    mode: Optional[List[int]] = Field(None, description="Integer wavevector for single-mode data")
    seed: Optional[int] = Field(None, description="Overrides the run seed")
    path: Optional[str] = Field(None, description="LPF1 file for kind='file'")

    @model_validator(mode="after")
    def consistent(self) -> "InitialDatum":
        if self.band[0] > self.band[1]:
            raise ValueError(f"Band {self.band} must satisfy q_a <= q_b")
        if self.kind == "file" and not self.path:
            raise ValueError("kind='file' requires a path")
        return self


# ============================================================
# RUN CONFIG
# ============================================================

class RunConfig(BaseModel):
    """One simulation / analysis run."""
    model_config = ConfigDict(populate_by_name=True)

    system: str = Field("euler-damped-2d", description="Registry key or path to a linear-system JSON file")
    mode: Literal["linear-exact", "linear-oracle", "nonlinear"] = "linear-exact"
    d: Optional[int] = Field(None, ge=1, le=3, description="Dimension; taken from the system when omitted")
    resolution: int = Field(64, description="Grid points per axis (power of two)")
    box_length: float = Field(DEFAULT_BOX, gt=0, description="Periodic box side")
    t_end: float = Field(10.0, gt=0)
    dt: Optional[float] = Field(None, gt=0, description="Time step for the nonlinear integrator")
    output_times: Optional[List[float]] = Field(None, description="Explicit output times")
    output_every: int = Field(20, ge=1, description="Number of output intervals when output_times is omitted")
    initial: InitialDatum = Field(default_factory=InitialDatum)
    lam: float = Field(1.0, gt=0, alias="lambda", description="Euler damping strength")
    gamma: float = Field(2.0, ge=1.0, description="Adiabatic exponent")
    cfl: float = Field(0.4, gt=0, le=1.0, description="CFL safety factor")
    dealias: Literal["two-thirds"] = "two-thirds"
    neighborhood_radius: Optional[float] = Field(None, gt=0, description="Step-halving radius for |V - Vbar|")
    seed: int = 0
    sigma_list: List[float] = Field(default_factory=lambda: [0.0], description="Regularities for decay fits")
    sigma1: Optional[float] = Field(None, description="Negative-regularity index of the datum; d/2 for gaussians")
    profile: Literal["gaussian", "high-band"] = "gaussian"
    angular_points: int = Field(32, ge=8, description="Directions per angle in the oracle quadrature")
    oracle_times: int = Field(200, ge=10, description="Output intervals of the radial oracle")
    epsilon: Optional[float] = Field(None, gt=0, lt=1, description="Fixed schedule parameter; autotuned when omitted")
    queries: List[QuerySpec] = Field(default_factory=list)
    fit_window: Optional[Tuple[float, float]] = None
    snapshot_every: int = Field(0, ge=0, description="Dump an LPF1 snapshot every k outputs (0: never)")
    variant: Literal["general", "refined"] = "general"

    @field_validator("resolution")
    @classmethod
    def power_of_two(cls, value: int) -> int:
        if not is_power_of_two(value):
            raise ValueError(f"Resolution must be a power of two, got {value}")
        return value

    @field_validator("output_times")
    @classmethod
    def increasing(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if not value or value[0] < 0:
            raise ValueError("Output times must be non-empty and non-negative")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("Output times must be strictly increasing")
        return value

    @model_validator(mode="after")
    def window_inside_run(self) -> "RunConfig":
        if self.fit_window is not None:
            a, b = self.fit_window
            if not 0 <= a < b:
                raise ValueError(f"Fit window {self.fit_window} must satisfy 0 <= t_a < t_b")
        return self

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "RunConfig":
        with open(path) as f:
            return cls.model_validate(json.load(f))

    def times(self) -> List[float]:
        if self.output_times is not None:
            times = list(self.output_times)
            return times if times[0] == 0.0 else [0.0] + times
        step = self.t_end / self.output_every
        return [k * step for k in range(self.output_every + 1)]

    def window(self) -> Tuple[float, float]:
        if self.fit_window is not None:
            return tuple(self.fit_window)
        return self.t_end / 10.0, self.t_end

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()
