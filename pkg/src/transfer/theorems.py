"""
Transfer bounds: composition of K, M, B and the base eigenvalue

    pp route:  mu_{1,p}(image) >= mu_{1,p}(source) / (K_p^p M_p^p)
    rp route:  mu_{1,p}(image) >= (K_p M_{r,p} B_{r,p})^{-p}
"""

import math
from typing import Optional

import sys
sys.path.append('src')

from geometry.domains import DomainSpec
from transfer.certificates import (
    BoundCertificate, LOWER, THEOREM_A, THEOREM_C, P_LAPLACE_PP, P_LAPLACE_RP,
)
from utils.errors import DivergentIntegralError, ValidityError


def _check_finite_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValidityError(f"{name} must be finite positive, got {value}")


def p_laplace_pp_bound(kp_p: float, mp_p: float, mu_base: float, p: float,
                       target: Optional[DomainSpec] = None,
                       method: str = P_LAPLACE_PP) -> BoundCertificate:
    """
    Lower bound mu_base / (K_p^p M_p^p).

    Args:
        kp_p: K_p^p
        mp_p: M_p^p
        mu_base: First eigenvalue of the source domain
        p: Exponent > 1
        target: Image domain recorded in the certificate

    Returns:
        BoundCertificate
    """
    if not p > 1:
        raise ValidityError(f"need p > 1, got {p}")
    _check_finite_positive(K_pow=kp_p, M_pow=mp_p, base=mu_base)
    bound = mu_base / (kp_p * mp_p)
    ledger = {
        "K": kp_p ** (1.0 / p), "M": mp_p ** (1.0 / p), "K_pow": kp_p, "M_pow": mp_p,
        "base": mu_base, "p": float(p),
    }
    return BoundCertificate(target, bound, LOWER, method, ledger)


def theorem_a_bound(k2_sq: float, m2_sq: float, mu1_base: float,
                    target: Optional[DomainSpec] = None) -> BoundCertificate:
    """Laplace case of the pp route: mu1_base / (K_2^2 M_2^2)"""
    return p_laplace_pp_bound(k2_sq, m2_sq, mu1_base, 2.0, target, method=THEOREM_A)


def p_laplace_rp_bound(kp: float, m_rp: float, b_rp: float, p: float,
                       target: Optional[DomainSpec] = None,
                       method: str = P_LAPLACE_RP) -> BoundCertificate:
    """
    Lower bound (K_p M_{r,p} B_{r,p})^{-p}.

    Args:
        kp: K_p
        m_rp: M_{r,p}
        b_rp: B_{r,p} of the source domain
        p: Exponent > 1

    Returns:
        BoundCertificate
    """
    if not p > 1:
        raise ValidityError(f"need p > 1, got {p}")
    if math.isinf(m_rp):
        raise DivergentIntegralError("M_{r,p} is infinite")
    _check_finite_positive(K=kp, M=m_rp, B=b_rp)
    bound = (kp * m_rp * b_rp) ** (-p)
    ledger = {"K": kp, "M": m_rp, "B": b_rp, "p": float(p)}
    return BoundCertificate(target, bound, LOWER, method, ledger)


def theorem_c_bound(k2: float, m_r2: float, b_r2: float,
                    target: Optional[DomainSpec] = None) -> BoundCertificate:
    """Laplace case of the rp route: (K_2 M_{r,2} B_{r,2})^{-2}"""
    return p_laplace_rp_bound(k2, m_r2, b_r2, 2.0, target, method=THEOREM_C)
