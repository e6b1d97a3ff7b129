"""Log-log power-law fitting used by the tail and rate diagnostics."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidWindow


@dataclass
class PowerLawFit:
    exponent: float     # decay rate p in y ~ coeff * x^(-p)
    coefficient: float
    r2: float
    n_points: int
    window: tuple


def fit_powerlaw(x, y) -> PowerLawFit:
    """Least-squares fit of |y| ~ c * x^(-p) in log-log coordinates."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if keep.sum() < 3:
        raise InvalidWindow("need at least 3 positive samples for a power-law fit")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(
        exponent=float(-slope),
        coefficient=float(np.exp(intercept)),
        r2=r2,
        n_points=int(keep.sum()),
        window=(float(x[keep].min()), float(x[keep].max())),
    )


def trend_slope(t, y) -> float:
    """Log-log regression slope of y against t (positive = growing)."""
    return -fit_powerlaw(t, y).exponent
