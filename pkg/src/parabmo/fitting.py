"""Power-law envelope fits in log-log coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_POINTS = 5
MIN_DECADES = 2.0


class FitError(ValueError):
    pass


@dataclass
class EnvelopeFit:
    """value ~ prefactor * abscissa**exponent, fitted by least squares on logs.

    ``slope_tol`` is relative to |target| (0.15 means +-15%); ``residual`` is
    the rms of the log10 residuals and must stay under ``residual_tol``.
    """

    abscissa: np.ndarray
    values: np.ndarray
    target: float
    slope_tol: float = 0.15
    residual_tol: float = 0.05
    label: str = ""
    exponent: float = field(init=False)
    prefactor: float = field(init=False)
    residual: float = field(init=False)
    local_slopes: np.ndarray = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise FitError("abscissa and values must be 1-d of equal length")
        if x.size < MIN_POINTS:
            raise FitError(f"need at least {MIN_POINTS} points, got {x.size}")
        if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
            raise FitError("log-log fit needs positive finite data")
        span = math.log10(x.max() / x.min())
        if span < MIN_DECADES - 1e-9:
            raise FitError(f"abscissa spans {span:.2f} decades, need {MIN_DECADES}")
        self.abscissa, self.values = x, y
        lx, ly = np.log10(x), np.log10(y)
        slope, icpt = np.polyfit(lx, ly, 1)
        self.exponent = float(slope)
        self.prefactor = float(10**icpt)
        self.residual = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
        self.local_slopes = np.diff(ly) / np.diff(lx)

    @property
    def decades(self) -> float:
        return math.log10(self.abscissa.max() / self.abscissa.min())

    @property
    def slope_ok(self) -> bool:
        # the floor only matters for a zero target, where rounding alone would fail
        return abs(self.exponent - self.target) <= max(self.slope_tol * abs(self.target), 1e-9)

    @property
    def residual_ok(self) -> bool:
        return self.residual <= self.residual_tol

    @property
    def passed(self) -> bool:
        return self.slope_ok and self.residual_ok

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "abscissa": self.abscissa.tolist(),
            "values": self.values.tolist(),
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "residual": self.residual,
            "local_slopes": self.local_slopes.tolist(),
            "target": self.target,
            "slope_tol": self.slope_tol,
            "residual_tol": self.residual_tol,
            "decades": self.decades,
            "passed": self.passed,
        }
