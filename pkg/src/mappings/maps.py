"""
Mapping families with analytic differentials
Identity, diagonal linear maps and the cusp map phi_a : H_1 -> H_g
"""

import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple

import numpy as np

import sys
sys.path.append('src')

from geometry.domains import (
    DomainSpec, BOX, BALL, ELLIPSOID, SIMPLEX_H1,
    box, ball, ellipsoid, holder_cusp,
)
from utils.errors import GeometryError, SingularPointError


IDENTITY = "Identity"
DIAGONAL_LINEAR = "DiagonalLinear"
CUSP_MAP = "CuspMap"

MAPPING_KINDS = (IDENTITY, DIAGONAL_LINEAR, CUSP_MAP)


@dataclass(frozen=True)
class MappingSpec:
    """
    Parametric mapping descriptor.

    DiagonalLinear is x -> diag(a_1..a_n) x. CuspMap is
    phi_a(x) = (x_1 x_n^{a g_1 - 1}, ..., x_{n-1} x_n^{a g_{n-1} - 1}, x_n^a),
    which sends the simplex H_1 onto the cusp H_g for every a > 0.
    """

    kind: str
    dim: int
    coefficients: Tuple[float, ...] = ()
    a: float = 1.0
    exponents: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in MAPPING_KINDS:
            raise GeometryError(f"unknown mapping kind: {self.kind}")
        if self.dim < 2:
            raise GeometryError(f"dimension must be >= 2, got {self.dim}")
        if self.kind == DIAGONAL_LINEAR:
            if len(self.coefficients) != self.dim or any(not (c > 0) for c in self.coefficients):
                raise GeometryError(f"diagonal map needs {self.dim} positive coefficients")
        if self.kind == CUSP_MAP:
            if not (self.a > 0 and math.isfinite(self.a)):
                raise GeometryError(f"cusp exponent a must be positive, got {self.a}")
            if len(self.exponents) != self.dim - 1 or any(not (g >= 1) for g in self.exponents):
                raise GeometryError("cusp map needs n-1 exponents >= 1")

    @property
    def gamma(self) -> float:
        return 1.0 + float(sum(self.exponents))

    def label(self) -> str:
        if self.kind == DIAGONAL_LINEAR:
            return "DiagonalLinear(" + ",".join(f"{c:g}" for c in self.coefficients) + ")"
        if self.kind == CUSP_MAP:
            return f"CuspMap(a={self.a:g},g=" + ",".join(f"{g:g}" for g in self.exponents) + ")"
        return f"Identity(n={self.dim})"

    def with_a(self, a: float) -> "MappingSpec":
        return MappingSpec(self.kind, self.dim, self.coefficients, float(a), self.exponents)


def identity_map(dim: int) -> MappingSpec:
    return MappingSpec(IDENTITY, dim)


def diagonal_linear(*coefficients: float) -> MappingSpec:
    return MappingSpec(DIAGONAL_LINEAR, len(coefficients),
                       coefficients=tuple(float(c) for c in coefficients))


def cusp_map(a: float, *exponents: float) -> MappingSpec:
    return MappingSpec(CUSP_MAP, len(exponents) + 1, a=float(a),
                       exponents=tuple(float(g) for g in exponents))


def mapping_from_dict(data: Dict[str, Any]) -> MappingSpec:
    kind = data.get("kind")
    if kind == DIAGONAL_LINEAR:
        spec = diagonal_linear(*data["coefficients"])
    elif kind == CUSP_MAP:
        spec = cusp_map(data.get("a", 1.0), *data["exponents"])
    elif kind == IDENTITY:
        spec = identity_map(int(data["dim"]))
    else:
        raise GeometryError(f"unknown mapping kind: {kind}")
    if "dim" in data and int(data["dim"]) != spec.dim:
        raise GeometryError(f"dim={data['dim']} does not match {spec.label()}")
    return spec


@dataclass
class DifferentialData:
    """Formal Jacobi matrix D phi(x) and the Jacobian J(x, phi)"""

    matrix: np.ndarray
    det: float


def _check_points(m: MappingSpec, x) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != m.dim:
        raise GeometryError(f"point dimension {pts.shape[1]} does not match mapping dimension {m.dim}")
    if m.kind == CUSP_MAP and np.any(pts[:, -1] <= 0):
        raise SingularPointError("cusp map is singular at x_n = 0")
    return pts, single


def differential_batch(m: MappingSpec, x) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised differential.

    Args:
        m: Mapping descriptor
        x: Points of shape (k, n)

    Returns:
        (matrices of shape (k, n, n), Jacobians of shape (k,))
    """
    pts, _ = _check_points(m, x)
    k, n = pts.shape
    mats = np.zeros((k, n, n))

    if m.kind == IDENTITY:
        mats[:] = np.eye(n)
        return mats, np.ones(k)

    if m.kind == DIAGONAL_LINEAR:
        coeffs = np.asarray(m.coefficients)
        mats[:] = np.diag(coeffs)
        return mats, np.full(k, float(np.prod(coeffs)))

    a = m.a
    g = np.asarray(m.exponents)
    xn = pts[:, -1]
    idx = np.arange(n - 1)
    # row i: d/dx_i = x_n^{a g_i - 1}, d/dx_n = (a g_i - 1) x_i x_n^{a g_i - 2}
    mats[:, idx, idx] = xn[:, None] ** (a * g[None, :] - 1.0)
    mats[:, idx, n - 1] = (a * g[None, :] - 1.0) * pts[:, :-1] * xn[:, None] ** (a * g[None, :] - 2.0)
    mats[:, n - 1, n - 1] = a * xn ** (a - 1.0)
    dets = a * xn ** (a * m.gamma - n)
    return mats, dets


def differential(m: MappingSpec, x) -> DifferentialData:
    """Exact differential at a single interior point"""
    mats, dets = differential_batch(m, np.atleast_2d(np.asarray(x, dtype=float)))
    return DifferentialData(matrix=mats[0], det=float(dets[0]))


def apply(m: MappingSpec, x) -> np.ndarray:
    """Forward map of a point or a batch of points"""
    pts, single = _check_points(m, x)
    if m.kind == IDENTITY:
        out = pts.copy()
    elif m.kind == DIAGONAL_LINEAR:
        out = pts * np.asarray(m.coefficients)[None, :]
    else:
        g = np.asarray(m.exponents)
        xn = pts[:, -1:]
        out = np.empty_like(pts)
        out[:, :-1] = pts[:, :-1] / xn * xn ** (m.a * g[None, :])
        out[:, -1] = xn[:, 0] ** m.a
    return out[0] if single else out


def image_domain(m: MappingSpec, d: DomainSpec) -> DomainSpec:
    """
    Descriptor of phi(d).

    Args:
        m: Mapping descriptor
        d: Source domain

    Returns:
        Image domain descriptor
    """
    if m.dim != d.dim:
        raise GeometryError(f"mapping dimension {m.dim} does not match domain dimension {d.dim}")
    if m.kind == IDENTITY:
        return d
    if m.kind == DIAGONAL_LINEAR:
        coeffs = m.coefficients
        if d.kind == BOX:
            return box(*(c * s for c, s in zip(coeffs, d.sides)))
        if d.kind == BALL:
            if len(set(coeffs)) == 1:
                return ball(d.dim, coeffs[0] * d.radius)
            return ellipsoid(*(c * d.radius for c in coeffs))
        if d.kind == ELLIPSOID:
            return ellipsoid(*(c * s for c, s in zip(coeffs, d.semiaxes)))
        raise GeometryError(f"no image descriptor for {m.label()} on {d.label()}")
    if d.kind != SIMPLEX_H1:
        raise GeometryError("the cusp map is defined on the simplex H_1")
    return holder_cusp(*m.exponents)
