"""
Decay exponent fits.

Power laws are fitted as log y = a - p log<t> with <t> = sqrt(1 + t^2);
exponential decay as log y = a - c t. Fits with R^2 below 0.98 are flagged.

Author: Hypocoax Team
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import linregress

from ..errors import DegenerateWindow

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10
RELIABLE_R2 = 0.98


@dataclass
class DecayFit:
    column: str
    exponent: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]
    samples: int
    kind: str = "power"

    @property
    def reliable(self) -> bool:
        return self.r_squared >= RELIABLE_R2

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["window"] = list(self.window)
        out["reliable"] = self.reliable
        return out


def japanese_bracket(t):
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


def _frame(record) -> pd.DataFrame:
    return record.frame if hasattr(record, "frame") else record


def _window_samples(record, column: str, window: Optional[Tuple[float, float]]):
    frame = _frame(record)
    if column not in frame.columns:
        raise KeyError(f"No column {column!r} to fit")
    t = frame["t"].to_numpy(dtype=float)
    y = frame[column].to_numpy(dtype=float)
    if window is None:
        window = (t[-1] / 10.0, t[-1])
    a, b = float(window[0]), float(window[1])
    mask = (t >= a) & (t <= b)
    if mask.sum() < MIN_SAMPLES:
        raise DegenerateWindow(f"Window [{a:g}, {b:g}] holds {int(mask.sum())} samples of {column}, need {MIN_SAMPLES}")
    if np.any(~np.isfinite(y[mask])) or np.any(y[mask] <= 0):
        raise DegenerateWindow(f"Column {column} has non-positive or non-finite values in [{a:g}, {b:g}]")
    return t[mask], y[mask], (a, b)


def _line(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    if np.ptp(y) == 0.0:
        return 0.0, float(y[0]), 1.0
    fit = linregress(x, y)
    residual = y - (fit.intercept + fit.slope * x)
    ss_res = float(np.sum(residual ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return float(fit.slope), float(fit.intercept), 1.0 - ss_res / ss_tot


def fit_decay_exponent(record: Union[pd.DataFrame, Any], column: str,
                       window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """Least squares of log value against log<t>; the exponent is minus the slope."""
    t, y, window = _window_samples(record, column, window)
    slope, intercept, r2 = _line(np.log(japanese_bracket(t)), np.log(y))
    result = DecayFit(column=column, exponent=-slope, intercept=intercept, r_squared=r2,
                      window=window, samples=len(t))
    if not result.reliable:
        logger.warning(f"Unreliable power-law fit for {column}: R^2 = {r2:.4f}")
    return result


def fit_exponential_rate(record: Union[pd.DataFrame, Any], column: str,
                         window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """Least squares of log value against t; the rate is minus the slope."""
    t, y, window = _window_samples(record, column, window)
    slope, intercept, r2 = _line(t, np.log(y))
    result = DecayFit(column=column, exponent=-slope, intercept=intercept, r_squared=r2,
                      window=window, samples=len(t), kind="exponential")
    if not result.reliable:
        logger.warning(f"Unreliable exponential fit for {column}: R^2 = {r2:.4f}")
    return result
