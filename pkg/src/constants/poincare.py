"""
Sobolev-Poincare constants B_{r,p} of convex domains and the base eigenvalue mu_{1,p}
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import sys
sys.path.append('src')

from geometry.domains import DomainSpec, diameter, is_convex, unit_ball_volume, volume
from constants.spectral import exact_mu1
from utils.errors import GeometryError, ValidityError

logger = logging.getLogger(__name__)

CONVEX_ESTIMATE = "lemma-4.1"
EXACT_EIGENVALUE = "exact-eigenvalue"
USER_SUPPLIED = "user-supplied"
H1_PRINTED = "h1-printed"


@dataclass
class PoincareConstantBound:
    """
    Upper bound for the (r, p) Sobolev-Poincare constant.

    validity holds the convexity flag, the exponent gap delta = 1/p - 1/r,
    its limit 1/n and the printed alternative 1/p + 1/r.
    """

    r: float
    p: float
    value: float
    source: str
    validity: Dict[str, Any] = field(default_factory=dict)


@dataclass
class BaseEigenvalue:
    """Base first eigenvalue mu_{1,p} of the source domain"""

    value: float
    p: float
    source: str


def _delta(n: int, r: float, p: float) -> float:
    delta = 1.0 / p - 1.0 / r
    if not (0.0 <= delta < 1.0 / n):
        raise ValidityError(
            f"exponent gap 1/p-1/r = {delta:.6g} outside [0, 1/n) for n={n}, r={r:g}, p={p:g}"
        )
    return delta


def convex_poincare_bound(d: DomainSpec, r: float, p: float) -> PoincareConstantBound:
    """
    Convex-domain estimate
    B_{r,p} <= diam^n/(n|D|) ((1-delta)/(1/n-delta))^{1-delta} w_n^{1-1/n} |D|^{1/n-delta}.

    Args:
        d: Convex domain
        r: Target Lebesgue exponent
        p: Gradient exponent

    Returns:
        PoincareConstantBound from the convex estimate
    """
    if not is_convex(d):
        raise GeometryError(f"{d.label()} is not convex")
    n = d.dim
    delta = _delta(n, r, p)
    vol = volume(d)
    value = (
        diameter(d) ** n / (n * vol)
        * ((1.0 - delta) / (1.0 / n - delta)) ** (1.0 - delta)
        * unit_ball_volume(n) ** (1.0 - 1.0 / n)
        * vol ** (1.0 / n - delta)
    )
    validity = {
        "convex": True,
        "delta": delta,
        "delta_limit": 1.0 / n,
        "printed_delta": 1.0 / p + 1.0 / r,
    }
    return PoincareConstantBound(r=r, p=p, value=value, source=CONVEX_ESTIMATE, validity=validity)


def h1_printed_poincare_estimate(n: int, r: float, p: float) -> PoincareConstantBound:
    """Printed simplex estimate n ((1-d)/(1/n-d))^{1-d} w_n^{1-1/n} (1/(n+1)!)^{1/n-d}"""
    delta = _delta(n, r, p)
    value = (
        n
        * ((1.0 - delta) / (1.0 / n - delta)) ** (1.0 - delta)
        * unit_ball_volume(n) ** (1.0 - 1.0 / n)
        * (1.0 / math.factorial(n + 1)) ** (1.0 / n - delta)
    )
    validity = {
        "convex": True,
        "delta": delta,
        "delta_limit": 1.0 / n,
        "printed_delta": 1.0 / p + 1.0 / r,
        "note": "uses diam=1 and a 1/(n+1)! volume factor",
    }
    return PoincareConstantBound(r=r, p=p, value=value, source=H1_PRINTED, validity=validity)


def p_base_eigenvalue(d: DomainSpec, p: float, override: Optional[float] = None) -> BaseEigenvalue:
    """
    Base first eigenvalue of d for the p-Laplacian.

    Args:
        d: Source domain
        p: Exponent
        override: User-supplied value, taken as is

    Returns:
        BaseEigenvalue
    """
    if override is not None:
        if not (override > 0 and math.isfinite(override)):
            raise ValidityError(f"base eigenvalue override must be positive, got {override}")
        return BaseEigenvalue(float(override), p, USER_SUPPLIED)
    if p == 2:
        mu = exact_mu1(d)
        if mu is not None:
            return BaseEigenvalue(mu, p, EXACT_EIGENVALUE)
    if not is_convex(d):
        raise ValidityError(f"no base eigenvalue for non-convex {d.label()}")
    bound = convex_poincare_bound(d, p, p)
    logger.info("base eigenvalue of %s from the convex estimate (p=%g)", d.label(), p)
    return BaseEigenvalue(bound.value ** (-p), p, CONVEX_ESTIMATE)
