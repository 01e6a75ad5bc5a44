"""Small result containers and fit helpers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BoundReport:
    """Outcome of a sup/ratio sweep."""

    name: str
    sup_ratio: float
    arg_max: object = None
    interior: bool | None = None
    details: dict = field(default_factory=dict)

    def __str__(self):
        return f"{self.name}: sup={self.sup_ratio:.6g} at {self.arg_max}"


@dataclass
class SlopeFit:
    """Least-squares line fit of log(y) against log(x)."""

    slope: float
    intercept: float
    r_squared: float
    x: np.ndarray = field(repr=False, default=None)
    y: np.ndarray = field(repr=False, default=None)


def fit_loglog(x, y) -> SlopeFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    good = (x > 0) & (y > 0) & np.isfinite(y)
    lx, ly = np.log(x[good]), np.log(y[good])
    if lx.size < 2:
        return SlopeFit(np.nan, np.nan, 0.0, x, y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(coef[0]), float(coef[1]), r2, x, y)


def fit_linear_in_logx(x, y) -> SlopeFit:
    """Fit y = slope * log(x) + intercept (for logarithmic growth laws)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lx = np.log(x)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(coef[0]), float(coef[1]), r2, x, y)
