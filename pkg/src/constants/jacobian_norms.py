"""
Jacobian norms M_s (essential sup) and M_{r,s} (integral) of the mapping families
"""

import math
from dataclasses import dataclass

import numpy as np

import sys
sys.path.append('src')

from geometry.domains import DomainSpec, SIMPLEX_H1, volume
from mappings.maps import MappingSpec, IDENTITY, DIAGONAL_LINEAR, differential_batch
from constants.quadrature import integrate_on_h1
from utils.errors import (
    DivergentIntegralError, GeometryError, UnboundedJacobianError, ValidityError,
)

CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"


@dataclass
class JacobianNorm:
    """
    M_{r,s} = (int |J|^{r/(r-s)})^{(r-s)/(rs)}; r == s means the sup norm M_s.

    value_pow is M^s.
    """

    r: float
    s: float
    value: float
    method: str
    value_pow: float = math.nan
    quadrature_error_estimate: float = 0.0


def _check_source(m: MappingSpec, d: DomainSpec) -> None:
    if m.dim != d.dim:
        raise GeometryError(f"mapping dimension {m.dim} does not match domain dimension {d.dim}")


def m_sup(m: MappingSpec, d: DomainSpec, s: float) -> JacobianNorm:
    """
    Essential sup norm M_s = ess sup |J|^{1/s}.

    Args:
        m: Mapping descriptor
        d: Source domain
        s: Exponent >= 1

    Returns:
        JacobianNorm with r == s
    """
    if s < 1:
        raise ValidityError(f"need s >= 1, got {s}")
    _check_source(m, d)
    if m.kind == IDENTITY:
        return JacobianNorm(s, s, 1.0, CLOSED_FORM, value_pow=1.0)
    if m.kind == DIAGONAL_LINEAR:
        prod = float(np.prod(m.coefficients))
        return JacobianNorm(s, s, prod ** (1.0 / s), CLOSED_FORM, value_pow=prod)
    # a x_n^{a gamma - n} on (0,1): sup is a iff the exponent is nonnegative
    exponent = m.a * m.gamma - m.dim
    if exponent < 0:
        raise UnboundedJacobianError(
            f"ess sup |J| unbounded: a*gamma-n = {exponent:.6g} < 0"
        )
    return JacobianNorm(s, s, m.a ** (1.0 / s), CLOSED_FORM, value_pow=m.a)


def cusp_integral_denominator(m: MappingSpec, r: float, s: float) -> float:
    """(a gamma - n) r + n (r - s); the cusp M_{r,s} is finite iff it is positive"""
    return (m.a * m.gamma - m.dim) * r + m.dim * (r - s)


def m_rs(m: MappingSpec, d: DomainSpec, r: float, s: float, method: str = CLOSED_FORM,
         tol: float = 1e-10, nodes: int = 64, cap: int = 10_000_000) -> JacobianNorm:
    """
    Integral Jacobian norm M_{r,s}.

    Args:
        m: Mapping descriptor
        d: Source domain
        r, s: Exponents, 1 <= s < r
        method: closed-form or quadrature (quadrature on H_1 only)
        tol, nodes, cap: quadrature controls

    Returns:
        JacobianNorm
    """
    if not (1 <= s < r):
        raise ValidityError(f"need 1 <= s < r, got r={r}, s={s}")
    _check_source(m, d)
    outer = (r - s) / (r * s)

    if m.kind != IDENTITY and m.kind != DIAGONAL_LINEAR:
        denom = cusp_integral_denominator(m, r, s)
        if denom <= 1e-12 * m.dim * r:
            raise DivergentIntegralError(
                f"M_{{{r:g},{s:g}}} diverges: a={m.a:g} <= n*s/(gamma*r) = {m.dim * s / (m.gamma * r):.6g}"
            )

    if method == CLOSED_FORM:
        if m.kind in (IDENTITY, DIAGONAL_LINEAR):
            prod = 1.0 if m.kind == IDENTITY else float(np.prod(m.coefficients))
            vol = volume(d)
            return JacobianNorm(r, s, prod ** (1.0 / s) * vol ** outer, CLOSED_FORM,
                                value_pow=prod * vol ** ((r - s) / r))
        if d.kind != SIMPLEX_H1:
            raise GeometryError("the cusp map is defined on the simplex H_1")
        base = (r - s) / denom
        return JacobianNorm(r, s, m.a ** (1.0 / s) * base ** outer, CLOSED_FORM,
                            value_pow=m.a * base ** ((r - s) / r))

    if method != QUADRATURE:
        raise ValidityError(f"unknown Jacobian norm method: {method}")
    if d.kind != SIMPLEX_H1:
        raise ValidityError("quadrature is implemented on the simplex H_1 only")

    power = r / (r - s)

    def integrand(pts: np.ndarray) -> np.ndarray:
        return np.abs(differential_batch(m, pts)[1]) ** power

    result = integrate_on_h1(integrand, m.dim, tol=tol, nodes=nodes, cap=cap)
    if result.value <= 0:
        raise DivergentIntegralError("Jacobian integral is not positive")
    value = result.value ** outer
    error = value * outer * result.error_estimate / result.value
    return JacobianNorm(r, s, value, QUADRATURE, value_pow=value ** s,
                        quadrature_error_estimate=error)
