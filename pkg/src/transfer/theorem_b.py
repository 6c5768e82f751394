"""
Laplace bounds on Holder cusp domains H_g through the cusp map phi_a : H_1 -> H_g

For fixed r the free exponent a ranges over (2n/(gamma r), (n-2)/(gamma-2)];
the bound is maximised over a on that interval and then over an r grid.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

import sys
sys.path.append('src')

from geometry.domains import holder_cusp, simplex_h1
from mappings.maps import cusp_map
from mappings.dilatation import (
    admissible_a_range, dilatation_sup, frobenius_bound_cusp, printed_frobenius_square,
)
from constants.jacobian_norms import m_rs
from constants.poincare import convex_poincare_bound
from transfer.certificates import BoundCertificate, LOWER, PAPER_PRINTED, RIGOROUS, THEOREM_B
from transfer.theorems import theorem_c_bound
from utils.errors import InapplicableError, InapplicableRouteError, ValidityError

logger = logging.getLogger(__name__)

VARIANTS = (RIGOROUS, PAPER_PRINTED)


def default_r_grid(n: int, points: int = 16, eps: float = 1e-3, p: float = 2.0) -> List[float]:
    """
    Log-spaced r values in (p+eps, np/(n-p)-eps), the range where the convex
    Poincare estimate holds; the upper end is 64 when p >= n.
    """
    if points < 1:
        raise ValidityError(f"r grid needs at least one point, got {points}")
    hi = n * p / (n - p) - eps if p < n else 64.0
    return [float(r) for r in np.geomspace(p + eps, hi, points)]


def _integral_factor(a: float, r: float, n: int, gamma: float) -> float:
    """(int_{H_1} x_n^{(a gamma - n) r/(r-2)} dx)^{(r-2)/r}"""
    denom = a * gamma * r - 2.0 * n
    if denom <= 0:
        raise ValidityError(f"Jacobian integral diverges at a={a:g}, r={r:g}")
    return ((r - 2.0) / denom) ** ((r - 2.0) / r)


def theorem_b_objective(a: float, r: float, n: int, g: Sequence[float], b_r2: float,
                        variant: str = RIGOROUS) -> float:
    """
    Lower bound on mu_1(H_g) at one (a, r) point.

    rigorous:      1 / (A_a^2 I B^2), A_a the corrected Frobenius constant
    paper-printed: 1 / (A_printed^2 a I B^2), undefined when A_printed^2 <= 0

    I is the integral factor; both forms take B = B_{r,2}(H_1).
    """
    gamma = 1.0 + float(sum(g))
    integral = _integral_factor(a, r, n, gamma)
    if variant == RIGOROUS:
        if 2.0 * (a - 1.0) - (a * gamma - n) < -1e-12:
            raise ValidityError(f"K_2 unbounded at a={a:g}")
        return 1.0 / (frobenius_bound_cusp(a, g, n) ** 2 * integral * b_r2 ** 2)
    if variant == PAPER_PRINTED:
        square = printed_frobenius_square(a, g)
        if square <= 0:
            raise ValidityError(f"printed A^2 = {square:.6g} is negative at a={a:g}")
        return 1.0 / (square * a * integral * b_r2 ** 2)
    raise ValidityError(f"unknown variant: {variant}")


def _safe(objective: Callable[[float], float], a: float) -> float:
    try:
        return objective(a)
    except InapplicableError:
        return math.nan


def _negated(objective: Callable[[float], float], a: float) -> float:
    value = _safe(objective, a)
    return -value if math.isfinite(value) else math.inf


def optimize_a(objective: Callable[[float], float], lower: float, upper: float,
               grid_points: int = 64, tol: float = 1e-10, margin: float = 1e-6) -> Tuple[float, float]:
    """
    Maximise objective on [lower + margin, upper].

    A uniform grid locates the best cell; a bounded Brent (golden-section
    with parabolic steps) search refines it. Points where the objective is
    undefined are skipped.

    Args:
        objective: a -> value, may raise InapplicableError
        lower: Open lower end of the admissible interval
        upper: Closed upper end
        grid_points: Size of the locating grid
        tol: Absolute tolerance in a

    Returns:
        (a*, value)
    """
    lo = lower + margin
    if lo >= upper:
        raise InapplicableRouteError(f"empty a-interval ({lower:.6g}, {upper:.6g}]")
    grid = np.linspace(lo, upper, grid_points)
    values = np.array([_safe(objective, float(a)) for a in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise InapplicableRouteError("objective undefined on every grid point of the a-interval")
    best = int(np.nanargmax(np.where(finite, values, -np.inf)))
    bracket = (float(grid[max(best - 1, 0)]), float(grid[min(best + 1, grid_points - 1)]))
    a_star, value = float(grid[best]), float(values[best])
    if bracket[1] > bracket[0]:
        res = minimize_scalar(lambda a: _negated(objective, a), bounds=bracket,
                              method="bounded", options={"xatol": tol})
        logger.debug("a refinement: %d evaluations, a=%.12g", res.nfev, res.x)
        refined = _safe(objective, float(res.x))
        if np.isfinite(refined) and refined > value:
            a_star, value = float(res.x), refined
    return a_star, value


@dataclass
class TheoremBPoint:
    """Outcome of the a-optimisation at one r"""

    r: float
    lower: float
    upper: float
    variant: str
    a_star: float = math.nan
    value: float = math.nan
    B: float = math.nan
    valid: bool = False
    invalid_points: int = 0
    min_printed_square: float = math.nan
    notes: List[str] = field(default_factory=list)


def _check_grid(n: int, r_grid: Sequence[float]) -> None:
    if n < 3:
        raise ValidityError(f"cusp bounds need n >= 3, got {n}")
    if len(r_grid) == 0:
        raise ValidityError("empty r grid")
    limit = 2.0 * n / (n - 2.0)
    bad = [r for r in r_grid if not (2.0 < r < limit)]
    if bad:
        raise ValidityError(f"r outside (2, {limit:g}): {bad}")


def theorem_b_scan(n: int, g: Sequence[float], r_grid: Optional[Sequence[float]] = None,
                   variant: str = RIGOROUS, b_override: Optional[float] = None,
                   grid_points: int = 64, tol: float = 1e-10,
                   margin: float = 1e-6) -> List[TheoremBPoint]:
    """
    Per-r optimisation records for the cusp bound.

    Args:
        n: Dimension >= 3
        g: Cusp exponents (n-1 values >= 1)
        r_grid: r values in (2, 2n/(n-2)); default_r_grid(n) when None
        variant: rigorous or paper-printed
        b_override: Fixed B_{r,2}(H_1) instead of the convex estimate

    Returns:
        One TheoremBPoint per r, in grid order
    """
    if variant not in VARIANTS:
        raise ValidityError(f"unknown variant: {variant}")
    if len(g) != n - 1:
        raise ValidityError(f"need {n - 1} cusp exponents, got {len(g)}")
    r_grid = default_r_grid(n) if r_grid is None else list(r_grid)
    _check_grid(n, r_grid)
    gamma = 1.0 + float(sum(g))
    if gamma <= 2.0:
        raise ValidityError(f"gamma={gamma:g} leaves no admissible cusp exponent")
    base = simplex_h1(n)

    points = []
    for r in r_grid:
        rng = admissible_a_range(2.0, r, n, gamma)
        point = TheoremBPoint(r=float(r), lower=rng.lower, upper=rng.upper, variant=variant)
        points.append(point)
        if rng.empty:
            point.notes.append("empty admissible a-range")
            continue
        b_r2 = b_override if b_override is not None else convex_poincare_bound(base, r, 2.0).value
        point.B = b_r2

        if variant == PAPER_PRINTED:
            a_points = np.linspace(rng.lower + margin, rng.upper, grid_points)
            squares = np.array([printed_frobenius_square(float(a), g) for a in a_points])
            point.invalid_points = int(np.sum(squares <= 0))
            point.min_printed_square = float(squares.min())
            if point.invalid_points:
                point.notes.append(
                    f"printed A^2 negative on {point.invalid_points}/{grid_points} admissible points"
                )

        def objective(a: float, r=r, b_r2=b_r2) -> float:
            return theorem_b_objective(a, r, n, g, b_r2, variant)

        try:
            point.a_star, point.value = optimize_a(objective, rng.lower, rng.upper,
                                                   grid_points, tol, margin)
            point.valid = True
        except InapplicableRouteError as exc:
            point.notes.append(exc.reason)
        logger.debug("r=%.6g: a*=%.6g value=%.6g valid=%s", r, point.a_star, point.value, point.valid)
    return points


def theorem_b_bound(n: int, g: Sequence[float], r_grid: Optional[Sequence[float]] = None,
                    variant: str = RIGOROUS, b_override: Optional[float] = None,
                    grid_points: int = 64, tol: float = 1e-10,
                    margin: float = 1e-6) -> BoundCertificate:
    """
    Best lower bound on mu_1(H_g) over the r grid.

    The rigorous variant re-composes the certificate from the analytic K_2,
    the closed-form M_{r,2} and B_{r,2} at the optimal (a*, r*).

    Returns:
        BoundCertificate with a* and r* in the ledger
    """
    points = theorem_b_scan(n, g, r_grid, variant, b_override, grid_points, tol, margin)
    valid = [pt for pt in points if pt.valid]
    target = holder_cusp(*g)
    if not valid:
        if all(pt.lower >= pt.upper for pt in points):
            raise InapplicableRouteError("empty admissible a-range for every r")
        if variant == PAPER_PRINTED:
            raise InapplicableRouteError("paper-printed bound invalid: printed A^2 negative on every admissible point")
        raise InapplicableRouteError("no r in the grid yields a finite cusp bound")
    # ties keep the smallest r
    best = max(valid, key=lambda pt: pt.value)

    if variant == RIGOROUS:
        m = cusp_map(best.a_star, *g)
        source = simplex_h1(n)
        k2 = dilatation_sup(m, source, 2.0).value
        m_r2 = m_rs(m, source, best.r, 2.0).value
        cert = theorem_c_bound(k2, m_r2, best.B, target)
        cert.method = THEOREM_B
    else:
        ledger = {"B": best.B, "p": 2.0, "A_sq_printed": printed_frobenius_square(best.a_star, g)}
        cert = BoundCertificate(target, best.value, LOWER, THEOREM_B, ledger, variant=PAPER_PRINTED)
        cert.warn("paper-printed product, not a rigorous bound")
    cert.ledger["a"] = best.a_star
    cert.ledger["r"] = best.r
    cert.ledger["route"] = "cusp-optimised"
    if b_override is not None:
        cert.ledger["base_source"] = "user-supplied"
    skipped = [pt.r for pt in points if not pt.valid]
    if skipped:
        cert.notes.append(f"{len(skipped)} r value(s) without an admissible bound")
    return cert
