"""
p-dilatation of mappings
Pointwise distortion, rigorous essential-sup constants K_p and the sampled sup search
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

import sys
sys.path.append('src')

from geometry.domains import DomainSpec, sample_points, contains
from mappings.maps import (
    MappingSpec, IDENTITY, DIAGONAL_LINEAR, CUSP_MAP, differential_batch,
)
from utils.errors import GeometryError, UnboundedDilatationError, ValidityError

logger = logging.getLogger(__name__)

ANALYTIC = "analytic"
SAMPLED_SUP = "sampled-sup"
PAPER_VARIANT = "paper-variant"

SPECTRAL = "spectral"
FROBENIUS = "frobenius"


@dataclass
class DilatationReport:
    """
    K_p estimate for a mapping on its source domain.

    value_pow is K_p^p, kept separately so linear pipelines compose exactly.
    For the sampled search, value is the analytic upper bound and
    lower_witness_value the largest sampled pointwise dilatation.
    """

    p: float
    value: float
    method: str
    value_pow: float = math.nan
    witness: Optional[np.ndarray] = None
    lower_witness_value: float = math.nan
    frobenius_witness_value: float = math.nan
    norm_kind: str = SPECTRAL
    valid: bool = True
    evaluations: int = 0
    notes: List[str] = field(default_factory=list)


def operator_norm(matrix) -> float:
    """
    Spectral norm, the square root of the top eigenvalue of M^T M.

    Args:
        matrix: Square or rectangular real matrix

    Returns:
        Largest singular value
    """
    mat = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise ValidityError("operator norm of a matrix with non-finite entries")
    gram = mat.T @ mat
    return math.sqrt(max(float(np.linalg.eigvalsh(gram)[-1]), 0.0))


def _batch_norms(mats: np.ndarray, norm_kind: str) -> np.ndarray:
    if norm_kind == FROBENIUS:
        return np.sqrt(np.sum(mats ** 2, axis=(1, 2)))
    gram = np.einsum("kji,kjl->kil", mats, mats)
    return np.sqrt(np.clip(np.linalg.eigvalsh(gram)[:, -1], 0.0, None))


def pointwise_dilatation_batch(m: MappingSpec, x, p: float,
                               norm_kind: str = SPECTRAL) -> np.ndarray:
    """Vectorised (|D phi|^p / |J|)^{1/p}; 0 where both vanish, inf where only J does"""
    if not (1 <= p < math.inf):
        raise ValidityError(f"dilatation exponent must satisfy 1 <= p < inf, got {p}")
    mats, dets = differential_batch(m, x)
    norms = _batch_norms(mats, norm_kind)
    dets = np.abs(dets)
    out = np.empty_like(norms)
    zero_j = dets == 0
    # finite distortion: |D phi| = 0 where J = 0
    out[zero_j] = np.where(norms[zero_j] == 0, 0.0, math.inf)
    ok = ~zero_j
    out[ok] = (norms[ok] ** p / dets[ok]) ** (1.0 / p)
    return out


def pointwise_dilatation(m: MappingSpec, x, p: float, norm_kind: str = SPECTRAL) -> float:
    return float(pointwise_dilatation_batch(m, np.atleast_2d(np.asarray(x, dtype=float)), p, norm_kind)[0])


def frobenius_bound_cusp(a: float, g, n: int) -> float:
    """
    Corrected cusp constant A_a(gamma) = sqrt(sum (a g_i - 1)^2 + (n-1) + a^2).

    It bounds |D phi_a(x)| / x_n^{a-1} on H_1 in the Frobenius norm.
    """
    g = np.asarray(g, dtype=float)
    return math.sqrt(float(np.sum((a * g - 1.0) ** 2)) + (n - 1) + a * a)


def printed_frobenius_square(a: float, g) -> float:
    """The displayed expansion a^2(sum g_i^2 + 1) - 2a sum g_i; may be negative"""
    g = np.asarray(g, dtype=float)
    return a * a * (float(np.sum(g ** 2)) + 1.0) - 2.0 * a * float(np.sum(g))


def cusp_exponent(m: MappingSpec, p: float) -> float:
    """Exponent p(a-1) - (a gamma - n) of x_n in |D phi|^p / J"""
    return p * (m.a - 1.0) - (m.a * m.gamma - m.dim)


@dataclass
class AdmissibleRange:
    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return self.lower >= self.upper


def admissible_a_range(p: float, r: float, n: int, gamma: float,
                       s: Optional[float] = None) -> AdmissibleRange:
    """
    Interval (lower, upper] of cusp exponents a for the (r, s) pipeline.

    lower = s n / (gamma r) keeps M_{r,s} finite, upper = (n-p)/(gamma-p)
    keeps K_p finite. s defaults to p.
    """
    if not (1 < p < n):
        raise ValidityError(f"need 1 < p < n, got p={p}, n={n}")
    if gamma <= p:
        raise ValidityError(f"no cusp admissibility for gamma={gamma} <= p={p}")
    if r <= p:
        raise ValidityError(f"need r > p, got r={r}, p={p}")
    s = p if s is None else s
    return AdmissibleRange(lower=s * n / (gamma * r), upper=(n - p) / (gamma - p))


def bilipschitz_dilatation_bound(lipschitz: float, p: float, n: int) -> float:
    """K_p <= (L^{p+n})^{1/p} for an L-bi-Lipschitz homeomorphism"""
    return (lipschitz ** (p + n)) ** (1.0 / p)


def lipschitz_inverse_dilatation_bound(k_n: float, lipschitz: float, p: float, n: int) -> float:
    """K_p <= K_n^{n/p} L^{(n-p)/p} for a quasiconformal map with L-Lipschitz inverse, p <= n"""
    if not (1 <= p <= n):
        raise ValidityError(f"need 1 <= p <= n, got p={p}")
    return k_n ** (n / p) * lipschitz ** ((n - p) / p)


def _analytic(m: MappingSpec, p: float) -> DilatationReport:
    if m.kind == IDENTITY:
        return DilatationReport(p=p, value=1.0, value_pow=1.0, method=ANALYTIC)

    if m.kind == DIAGONAL_LINEAR:
        coeffs = np.asarray(m.coefficients)
        top = float(coeffs.max())
        prod = float(np.prod(coeffs))
        return DilatationReport(p=p, value=top / prod ** (1.0 / p),
                                value_pow=top ** p / prod, method=ANALYTIC)

    exponent = cusp_exponent(m, p)
    if exponent < -1e-12:
        raise UnboundedDilatationError(
            f"K_{p:g} unbounded: p(a-1)-(a*gamma-n) = {exponent:.6g} < 0 for a={m.a:g}"
        )
    big_a = frobenius_bound_cusp(m.a, m.exponents, m.dim)
    # sup over (0,1) of x^{exponent} is 1 for a nonnegative exponent
    value_pow = big_a ** p / m.a
    return DilatationReport(p=p, value=value_pow ** (1.0 / p), value_pow=value_pow,
                            method=ANALYTIC, norm_kind=FROBENIUS)


def _printed_variant(m: MappingSpec, p: float) -> DilatationReport:
    if m.kind != CUSP_MAP:
        report = _analytic(m, p)
        report.method = PAPER_VARIANT
        return report
    square = printed_frobenius_square(m.a, m.exponents)
    if square <= 0:
        return DilatationReport(
            p=p, value=math.nan, value_pow=math.nan, method=PAPER_VARIANT, valid=False,
            notes=[f"printed A_a(gamma)^2 = {square:.6g} is not positive"],
        )
    return DilatationReport(p=p, value=math.sqrt(square), value_pow=square ** (p / 2.0),
                            method=PAPER_VARIANT, norm_kind=FROBENIUS,
                            notes=["printed constant: no +2(n-1) term, no 1/a^{1/p} factor"])


def _local_grid(centre: np.ndarray, half_width: float, factor: int) -> np.ndarray:
    offsets = np.linspace(-half_width, half_width, 2 * factor + 1)
    mesh = np.meshgrid(*([offsets] * len(centre)), indexing="ij")
    return centre[None, :] + np.stack([g.ravel() for g in mesh], axis=1)


def _local_factor(factor: int, n: int, remaining: int) -> int:
    """Largest subdivision factor <= factor whose local grid fits the remaining budget"""
    while factor >= 1 and (2 * factor + 1) ** n > remaining:
        factor -= 1
    return factor


def _sampled(m: MappingSpec, d: DomainSpec, p: float, density: int, rounds: int,
             factor: int, budget: int, seed: Optional[int] = None) -> DilatationReport:
    # half the budget seeds the search, the rest refines around the witness
    pts = sample_points(d, density, max_points=max(budget // 2, 1), seed=seed)
    values = pointwise_dilatation_batch(m, pts, p)
    evaluations = len(pts)
    # first maximum wins ties, so the reduction is order-deterministic
    best = int(np.argmax(values))
    witness, witness_value = pts[best].copy(), float(values[best])

    half_width = 1.0 / density
    for round_no in range(rounds):
        local_factor = _local_factor(factor, d.dim, budget - evaluations)
        if local_factor < 1:
            break
        local = _local_grid(witness, half_width, local_factor)
        local = local[contains(d, local)]
        if len(local) == 0:
            break
        local_values = pointwise_dilatation_batch(m, local, p)
        evaluations += len(local)
        idx = int(np.argmax(local_values))
        if local_values[idx] > witness_value:
            witness, witness_value = local[idx].copy(), float(local_values[idx])
        logger.debug("sup search round %d: witness %.12g", round_no + 1, witness_value)
        half_width /= local_factor

    frob = float(pointwise_dilatation_batch(m, witness[None, :], p, FROBENIUS)[0])
    notes = [f"frobenius - spectral at witness = {frob - witness_value:.3e}"]
    try:
        upper = _analytic(m, p)
        value, value_pow = upper.value, upper.value_pow
    except UnboundedDilatationError as exc:
        value, value_pow = math.inf, math.inf
        notes.append(exc.reason)

    return DilatationReport(p=p, value=value, value_pow=value_pow, method=SAMPLED_SUP,
                            witness=witness, lower_witness_value=witness_value,
                            frobenius_witness_value=frob, evaluations=evaluations,
                            notes=notes)


def dilatation_sup(m: MappingSpec, d: DomainSpec, p: float, method: str = ANALYTIC,
                   density: int = 24, rounds: int = 3, factor: int = 4,
                   budget: int = 100_000, seed: Optional[int] = None) -> DilatationReport:
    """
    Essential-sup p-dilatation K_p of m over its source domain d.

    Args:
        m: Mapping descriptor
        d: Source domain of m
        p: Exponent, 1 <= p < inf
        method: analytic, sampled-sup or paper-variant
        density, rounds, factor, budget: sampled search controls
        seed: Seed of the capped seed sample (DEFAULT_SEED when omitted)

    Returns:
        DilatationReport
    """
    if not (1 <= p < math.inf):
        raise ValidityError(f"dilatation exponent must satisfy 1 <= p < inf, got {p}")
    if m.dim != d.dim:
        raise GeometryError(f"mapping dimension {m.dim} does not match domain dimension {d.dim}")
    if method == ANALYTIC:
        return _analytic(m, p)
    if method == PAPER_VARIANT:
        return _printed_variant(m, p)
    if method == SAMPLED_SUP:
        return _sampled(m, d, p, density, rounds, factor, budget, seed)
    raise ValidityError(f"unknown dilatation method: {method}")
