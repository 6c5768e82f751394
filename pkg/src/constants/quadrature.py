"""
Iterated Gauss-Legendre quadrature on the simplex H_1 = {0 < x_i < x_n < 1}
Geometric subdivision toward x_n = 0 with a geometric-tail extrapolation
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

import sys
sys.path.append('src')

from utils.errors import DivergentIntegralError, ValidityError

logger = logging.getLogger(__name__)

# x_n cells stop at 2^-200
MAX_CELLS = 200


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    cells: int
    evaluations: int


def _inner_rule(n: int, inner_nodes: int):
    """Tensor Gauss-Legendre rule on the unit cube (0,1)^{n-1}"""
    t, w = np.polynomial.legendre.leggauss(inner_nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([t] * (n - 1)), indexing="ij")
    weights = np.meshgrid(*([w] * (n - 1)), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    uw = np.prod(np.stack([g.ravel() for g in weights], axis=1), axis=1)
    return u, uw


def integrate_on_h1(f: Callable[[np.ndarray], np.ndarray], n: int, tol: float = 1e-10,
                    nodes: int = 64, cap: int = 10_000_000,
                    inner_nodes: int = 8) -> QuadratureResult:
    """
    Integrate f over H_1 in dimension n.

    The substitution x_i = x_n u_i maps H_1 to (0,1)^{n-1} x (0,1) with
    weight x_n^{n-1}. The x_n axis is split into cells [2^{-k-1}, 2^{-k}];
    once successive cell contributions decay geometrically the remaining
    tail is summed in closed form.

    Args:
        f: Vectorised integrand, points of shape (m, n) -> values (m,)
        n: Dimension
        tol: Absolute tolerance on the tail estimate
        nodes: Gauss-Legendre nodes per x_n cell
        cap: Hard cap on integrand evaluations
        inner_nodes: Gauss-Legendre nodes per inner axis

    Returns:
        QuadratureResult
    """
    if n < 2:
        raise ValidityError(f"dimension must be >= 2, got {n}")
    t, w = np.polynomial.legendre.leggauss(nodes)
    u, uw = _inner_rule(n, inner_nodes)
    per_cell = nodes * len(u)

    contributions = []
    evaluations = 0
    k = 0
    while True:
        if evaluations + per_cell > cap or k >= MAX_CELLS:
            raise DivergentIntegralError(
                f"quadrature stopped after {k} cells and {evaluations} evaluations without convergence"
            )
        hi = 0.5 ** k
        lo = 0.5 * hi
        xn = lo + (t + 1.0) * 0.5 * (hi - lo)
        wn = w * 0.5 * (hi - lo) * xn ** (n - 1)
        pts = np.empty((nodes * len(u), n))
        pts[:, :-1] = (xn[:, None, None] * u[None, :, :]).reshape(-1, n - 1)
        pts[:, -1] = np.repeat(xn, len(u))
        vals = np.asarray(f(pts), dtype=float).reshape(nodes, len(u))
        if not np.all(np.isfinite(vals)):
            raise DivergentIntegralError("integrand is not finite on a quadrature cell")
        contributions.append(float(np.dot(wn, vals @ uw)))
        evaluations += per_cell
        k += 1
        logger.debug("h1 quadrature cell %d: contribution %.6e", k, contributions[-1])

        if k < 4:
            continue
        c2, c1, c0 = contributions[-3], contributions[-2], contributions[-1]
        if c0 == 0.0 and c1 == 0.0:
            return QuadratureResult(math.fsum(contributions), 0.0, k, evaluations)
        if c1 == 0.0 or c2 == 0.0:
            continue
        q, q_prev = c0 / c1, c1 / c2
        if q >= 1.0 or q_prev >= 1.0:
            if k >= 8:
                raise DivergentIntegralError(
                    f"cell contributions do not decay toward x_n = 0 (ratio {q:.6g})"
                )
            continue
        tail = c0 * q / (1.0 - q)
        tail_prev = c0 * q_prev / (1.0 - q_prev)
        error = abs(tail - tail_prev)
        if error <= tol:
            value = math.fsum(contributions) + tail
            return QuadratureResult(value, error, k, evaluations)
