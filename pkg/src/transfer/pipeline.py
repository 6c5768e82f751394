"""
Route selection between the pp and rp transfer bounds
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import sys
sys.path.append('src')

from geometry.domains import DomainSpec, diameter, equal_volume_ball_radius, is_convex
from mappings.maps import MappingSpec, CUSP_MAP, image_domain
from mappings.dilatation import ANALYTIC, dilatation_sup
from constants.jacobian_norms import CLOSED_FORM, m_rs, m_sup
from constants.poincare import convex_poincare_bound, p_base_eigenvalue
from constants.spectral import bessel_first_zero, payne_weinberger, szego_weinberger_upper
from transfer.certificates import (
    BoundCertificate, LOWER, PAYNE_WEINBERGER, RIGOROUS, SZEGO_WEINBERGER, UPPER,
)
from transfer.theorems import p_laplace_pp_bound, p_laplace_rp_bound, theorem_a_bound, theorem_c_bound
from transfer.theorem_b import default_r_grid, theorem_b_bound
from utils.errors import (
    InapplicableError, InapplicableRouteError, UnboundedDilatationError, UnboundedJacobianError,
)

logger = logging.getLogger(__name__)


@dataclass
class PipelineOptions:
    """Numeric controls of auto_pipeline, filled from the numerics config section"""

    optimize_a: bool = False
    mu_base: Optional[float] = None
    b_override: Optional[float] = None
    r_grid_points: int = 16
    r_grid_eps: float = 1e-3
    a_grid_points: int = 64
    golden_tol: float = 1e-10
    a_lower_margin: float = 1e-6
    dilatation_method: str = ANALYTIC
    sampling_density: int = 24
    sup_rounds: int = 3
    sup_factor: int = 4
    sup_budget: int = 100_000
    seed: Optional[int] = None
    jacobian_method: str = CLOSED_FORM
    quad_tol: float = 1e-10
    quad_nodes: int = 64
    quad_cap: int = 10_000_000

    @classmethod
    def from_config(cls, numerics: Dict[str, Any], **overrides) -> "PipelineOptions":
        keys = cls.__dataclass_fields__.keys()
        values = {k: v for k, v in numerics.items() if k in keys}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _pp_route(source: DomainSpec, mapping: MappingSpec, image: DomainSpec, p: float,
              kp_pow: float, mp_pow: float, options: PipelineOptions) -> BoundCertificate:
    base = p_base_eigenvalue(source, p, options.mu_base)
    if p == 2:
        cert = theorem_a_bound(kp_pow, mp_pow, base.value, image)
    else:
        cert = p_laplace_pp_bound(kp_pow, mp_pow, base.value, p, image)
    cert.ledger["base_source"] = base.source
    return cert


def _rp_route(source: DomainSpec, mapping: MappingSpec, image: DomainSpec, p: float,
              kp: float, r_grid: Sequence[float], options: PipelineOptions) -> BoundCertificate:
    best: Optional[BoundCertificate] = None
    reasons = []
    for r in r_grid:
        try:
            m = m_rs(mapping, source, r, p, options.jacobian_method,
                     options.quad_tol, options.quad_nodes, int(options.quad_cap))
            if options.b_override is not None:
                b_value = options.b_override
            else:
                b_value = convex_poincare_bound(source, r, p).value
            if p == 2:
                cert = theorem_c_bound(kp, m.value, b_value, image)
            else:
                cert = p_laplace_rp_bound(kp, m.value, b_value, p, image)
        except InapplicableError as exc:
            reasons.append(f"r={r:.6g}: {exc.reason}")
            continue
        cert.ledger["r"] = float(r)
        logger.debug("rp route r=%.6g bound=%.6g", r, cert.bound_value)
        if best is None or cert.bound_value > best.bound_value:
            best = cert
    if best is None:
        detail = reasons[0] if reasons else "empty r grid"
        raise InapplicableRouteError(f"no r in the grid gives finite constants ({detail})")
    if options.b_override is not None:
        best.ledger["base_source"] = "user-supplied"
    if reasons:
        best.notes.append(f"{len(reasons)} r value(s) skipped")
    return best


def attach_classical(cert: BoundCertificate, image: DomainSpec, p: float) -> BoundCertificate:
    """Attach the Szego-Weinberger upper bound and the Payne-Weinberger comparison"""
    if p != 2:
        return cert
    cert.upper_bound = szego_weinberger_upper(image)
    if is_convex(image):
        cert.ledger["payne_weinberger"] = payne_weinberger(image)
    if cert.bound_value > cert.upper_bound:
        cert.warn(f"lower bound {cert.bound_value:.6g} exceeds upper bound {cert.upper_bound:.6g}")
    return cert


def auto_pipeline(source: DomainSpec, mapping: MappingSpec, p: float = 2.0,
                  r_grid: Optional[Sequence[float]] = None,
                  options: Optional[PipelineOptions] = None) -> BoundCertificate:
    """
    Lower bound on mu_{1,p}(mapping(source)).

    With a finite sup norm M_p the pp route (theorem-A for p = 2) is used;
    otherwise the rp route scans r_grid. With optimize_a a cusp mapping is
    re-optimised over its exponent a as well.

    Args:
        source: Source domain of the mapping
        mapping: Mapping descriptor
        p: Exponent
        r_grid: r values for the rp route (default_r_grid when None)
        options: Numeric controls

    Returns:
        BoundCertificate with the classical interval attached when p = 2
    """
    options = options or PipelineOptions()
    image = image_domain(mapping, source)
    n = source.dim
    if r_grid is None:
        r_grid = default_r_grid(n, options.r_grid_points, options.r_grid_eps, p)

    if options.optimize_a and mapping.kind == CUSP_MAP and p == 2:
        logger.info("routing %s: cusp bound optimised over a and r", image.label())
        cert = theorem_b_bound(n, mapping.exponents, r_grid, RIGOROUS, options.b_override,
                               options.a_grid_points, options.golden_tol, options.a_lower_margin)
        return attach_classical(cert, image, p)

    try:
        k = dilatation_sup(mapping, source, p, options.dilatation_method, options.sampling_density,
                           options.sup_rounds, options.sup_factor, options.sup_budget, options.seed)
    except UnboundedDilatationError as exc:
        raise InapplicableRouteError(exc.reason) from exc

    try:
        m = m_sup(mapping, source, p)
    except UnboundedJacobianError as exc:
        logger.info("routing %s: rp route (%s)", image.label(), exc.reason)
        cert = _rp_route(source, mapping, image, p, k.value, r_grid, options)
    else:
        logger.info("routing %s: pp route", image.label())
        cert = _pp_route(source, mapping, image, p, k.value_pow, m.value_pow, options)

    if mapping.kind == CUSP_MAP:
        cert.ledger["a"] = mapping.a
    return attach_classical(cert, image, p)


def classical_comparison(cert: BoundCertificate) -> Dict[str, Any]:
    """
    Compare a lower certificate with Payne-Weinberger on its (convex) target.

    Returns:
        dict with the certificate bound, the classical bound, their ratio and
        whether the certificate is sharper
    """
    target = cert.target_domain
    if target is None or not is_convex(target):
        return {"bound": cert.bound_value, "payne_weinberger": math.nan,
                "ratio": math.nan, "better": False}
    classical = payne_weinberger(target)
    return {
        "bound": cert.bound_value,
        "payne_weinberger": classical,
        "ratio": cert.bound_value / classical,
        "better": cert.bound_value > classical,
    }


def classical_certificates(image: DomainSpec) -> List[BoundCertificate]:
    """
    The classical interval on mu_1(image) as standalone certificates.

    Payne-Weinberger (lower) is emitted only for convex domains;
    Szego-Weinberger (upper) always.
    """
    certs = []
    if is_convex(image):
        certs.append(BoundCertificate(image, payne_weinberger(image), LOWER, PAYNE_WEINBERGER,
                                      {"p": 2.0, "diameter": diameter(image)}))
    ledger = {"p": 2.0, "bessel_zero": bessel_first_zero(image.dim).value,
              "ball_radius": equal_volume_ball_radius(image)}
    certs.append(BoundCertificate(image, szego_weinberger_upper(image), UPPER, SZEGO_WEINBERGER, ledger))
    return certs
