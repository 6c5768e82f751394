"""
Bessel-derivative zeros and the classical eigenvalue bounds
Payne-Weinberger (convex lower) and Szego-Weinberger (upper)
"""

import functools
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv, jvp

import sys
sys.path.append('src')

from geometry.domains import (
    DomainSpec, BOX, BALL, diameter, equal_volume_ball_radius, is_convex,
)
from utils.errors import GeometryError, ValidityError

SCAN_STEP = 1e-2
SCAN_MAX = 10.0


@dataclass(frozen=True)
class BesselRoot:
    """First positive zero p_{n/2} of (t^{1-n/2} J_{n/2}(t))'"""

    n: int
    value: float
    bracket: Tuple[float, float]
    residual: float


def bessel_target(t, n: int):
    """d/dt [t^{1-n/2} J_{n/2}(t)]"""
    nu = n / 2.0
    e = 1.0 - nu
    t = np.asarray(t, dtype=float)
    return e * t ** (e - 1.0) * jv(nu, t) + t ** e * jvp(nu, t)


@functools.lru_cache(maxsize=None)
def bessel_first_zero(n: int) -> BesselRoot:
    """
    Locate p_{n/2} by scanning (0, 10] for the first sign change, then brentq.

    Args:
        n: Dimension >= 2

    Returns:
        BesselRoot; for n = 2 the value is j'_{1,1}
    """
    if n < 2:
        raise ValidityError(f"dimension must be >= 2, got {n}")
    grid = np.arange(SCAN_STEP, SCAN_MAX + SCAN_STEP / 2, SCAN_STEP)
    vals = bessel_target(grid, n)
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(flips) == 0:
        raise ValidityError(f"no sign change of the Bessel target on (0, {SCAN_MAX:g}] for n={n}")
    lo, hi = float(grid[flips[0]]), float(grid[flips[0] + 1])
    root = brentq(lambda t: float(bessel_target(t, n)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    residual = float(bessel_target(root, n))
    if abs(residual) >= 1e-12:
        raise ValidityError(f"Bessel root residual {residual:.3e} too large for n={n}")
    return BesselRoot(n=n, value=float(root), bracket=(lo, hi), residual=residual)


def exact_mu1(d: DomainSpec) -> Optional[float]:
    """Known first nonzero Neumann eigenvalue; None when no closed form exists"""
    if d.kind == BOX:
        return math.pi ** 2 / max(d.sides) ** 2
    if d.kind == BALL:
        return (bessel_first_zero(d.dim).value / d.radius) ** 2
    return None


def payne_weinberger(d: DomainSpec) -> float:
    """pi^2 / diam^2, a lower bound on convex domains"""
    if not is_convex(d):
        raise GeometryError(f"Payne-Weinberger needs a convex domain, got {d.label()}")
    return math.pi ** 2 / diameter(d) ** 2


def szego_weinberger_upper(d: DomainSpec) -> float:
    """p_{n/2}^2 / R*^2 with R* the equal-volume ball radius"""
    return (bessel_first_zero(d.dim).value / equal_volume_ball_radius(d)) ** 2
