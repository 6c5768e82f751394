"""
Parametric domain descriptors
Exact geometric quantities, strict-interior membership and deterministic sampling
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Tuple

import numpy as np
from matplotlib.path import Path as PolygonPath
from scipy.spatial.distance import pdist

import sys
sys.path.append('src')

from utils.errors import GeometryError


BOX = "Box"
BALL = "Ball"
ELLIPSOID = "Ellipsoid"
SIMPLEX_H1 = "SimplexH1"
HOLDER_CUSP = "HolderCusp"
POLYGON_2D = "Polygon2D"

DOMAIN_KINDS = (BOX, BALL, ELLIPSOID, SIMPLEX_H1, HOLDER_CUSP, POLYGON_2D)

# Fixed seed for every Monte-Carlo estimate in the toolkit
DEFAULT_SEED = 20240917

# Flat cell indices of a sampling grid must fit a signed 64-bit integer
MAX_GRID_CELLS = 2 ** 62


@dataclass(frozen=True)
class DomainSpec:
    """
    Immutable description of a computational domain.

    Box is (0,s_1)x...x(0,s_n); Ball and Ellipsoid are centred at the
    origin; SimplexH1 is {0<x_n<1, 0<x_i<x_n}; HolderCusp is
    {0<x_n<1, 0<x_i<x_n^gamma_i}; Polygon2D is a simple counterclockwise
    polygon.

    Args:
        kind: One of DOMAIN_KINDS
        dim: Space dimension n >= 2
        sides: Box side lengths
        radius: Ball radius
        semiaxes: Ellipsoid semiaxes
        exponents: HolderCusp exponent vector g (length n-1)
        vertices: Polygon2D vertex list
    """

    kind: str
    dim: int
    sides: Tuple[float, ...] = ()
    radius: float = 0.0
    semiaxes: Tuple[float, ...] = ()
    exponents: Tuple[float, ...] = ()
    vertices: Tuple[Tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        validate_domain(self)

    @property
    def gamma(self) -> float:
        """Cusp order gamma = 1 + sum(gamma_i); equals n for the simplex"""
        if self.kind == HOLDER_CUSP:
            return 1.0 + float(sum(self.exponents))
        if self.kind == SIMPLEX_H1:
            return float(self.dim)
        raise GeometryError(f"gamma undefined for {self.kind}")

    def label(self) -> str:
        """Stable short text used as the CSV domain column"""
        if self.kind == BOX:
            body = ",".join(_fmt(s) for s in self.sides)
        elif self.kind == BALL:
            body = f"n={self.dim},R={_fmt(self.radius)}"
        elif self.kind == ELLIPSOID:
            body = ",".join(_fmt(s) for s in self.semiaxes)
        elif self.kind == SIMPLEX_H1:
            body = f"n={self.dim}"
        elif self.kind == HOLDER_CUSP:
            body = "g=" + ",".join(_fmt(s) for s in self.exponents)
        else:
            body = f"{len(self.vertices)} vertices"
        return f"{self.kind}({body})"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind, "dim": self.dim}
        if self.kind == BOX:
            data["sides"] = list(self.sides)
        elif self.kind == BALL:
            data["radius"] = self.radius
        elif self.kind == ELLIPSOID:
            data["semiaxes"] = list(self.semiaxes)
        elif self.kind == HOLDER_CUSP:
            data["exponents"] = list(self.exponents)
        elif self.kind == POLYGON_2D:
            data["vertices"] = [list(v) for v in self.vertices]
        return data


def _fmt(value: float) -> str:
    return f"{value:g}"


# ----------------------------------------------------------------------------
# Constructors
# ----------------------------------------------------------------------------

def box(*sides: float) -> DomainSpec:
    return DomainSpec(BOX, len(sides), sides=tuple(float(s) for s in sides))


def ball(dim: int, radius: float = 1.0) -> DomainSpec:
    return DomainSpec(BALL, dim, radius=float(radius))


def ellipsoid(*semiaxes: float) -> DomainSpec:
    return DomainSpec(ELLIPSOID, len(semiaxes), semiaxes=tuple(float(s) for s in semiaxes))


def simplex_h1(dim: int) -> DomainSpec:
    return DomainSpec(SIMPLEX_H1, dim)


def holder_cusp(*exponents: float) -> DomainSpec:
    return DomainSpec(HOLDER_CUSP, len(exponents) + 1,
                      exponents=tuple(float(g) for g in exponents))


def polygon(vertices) -> DomainSpec:
    verts = tuple((float(x), float(y)) for x, y in vertices)
    return DomainSpec(POLYGON_2D, 2, vertices=verts)


def domain_from_dict(data: Dict[str, Any]) -> DomainSpec:
    """
    Build a descriptor from a config mapping.

    Args:
        data: Mapping with keys kind, dim and the kind-specific array

    Returns:
        Validated DomainSpec
    """
    kind = data.get("kind")
    if kind not in DOMAIN_KINDS:
        raise GeometryError(f"unknown domain kind: {kind}")
    dim = int(data.get("dim", 0))
    if kind == BOX:
        spec = box(*data["sides"])
    elif kind == BALL:
        spec = ball(dim, data.get("radius", 1.0))
    elif kind == ELLIPSOID:
        spec = ellipsoid(*data["semiaxes"])
    elif kind == SIMPLEX_H1:
        spec = simplex_h1(dim)
    elif kind == HOLDER_CUSP:
        spec = holder_cusp(*data["exponents"])
    else:
        spec = polygon(data["vertices"])
    if dim and spec.dim != dim:
        raise GeometryError(f"dim={dim} does not match {spec.label()}")
    return spec


# ----------------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------------

def validate_domain(d: DomainSpec) -> None:
    """Raise GeometryError unless the descriptor satisfies its invariants"""
    if d.kind not in DOMAIN_KINDS:
        raise GeometryError(f"unknown domain kind: {d.kind}")
    if d.dim < 2:
        raise GeometryError(f"dimension must be >= 2, got {d.dim}")

    if d.kind == BOX:
        _check_positive(d.sides, d.dim, "side lengths")
    elif d.kind == BALL:
        if not (d.radius > 0 and math.isfinite(d.radius)):
            raise GeometryError(f"ball radius must be positive, got {d.radius}")
    elif d.kind == ELLIPSOID:
        _check_positive(d.semiaxes, d.dim, "semiaxes")
    elif d.kind == HOLDER_CUSP:
        if len(d.exponents) != d.dim - 1:
            raise GeometryError("cusp needs n-1 exponents")
        if any(not (g >= 1.0 and math.isfinite(g)) for g in d.exponents):
            raise GeometryError(f"cusp exponents must be >= 1, got {d.exponents}")
    elif d.kind == POLYGON_2D:
        if d.dim != 2:
            raise GeometryError("polygons are planar")
        _check_polygon(np.asarray(d.vertices, dtype=float))


def _check_positive(values, dim: int, what: str) -> None:
    if len(values) != dim:
        raise GeometryError(f"expected {dim} {what}, got {len(values)}")
    if any(not (v > 0 and math.isfinite(v)) for v in values):
        raise GeometryError(f"{what} must be positive, got {tuple(values)}")


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test via orientation signs"""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_segment(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and on_segment(q1, q2, p1):
        return True
    if d2 == 0 and on_segment(q1, q2, p2):
        return True
    if d3 == 0 and on_segment(p1, p2, q1):
        return True
    if d4 == 0 and on_segment(p1, p2, q2):
        return True
    return False


def _check_polygon(verts: np.ndarray) -> None:
    m = len(verts)
    if m < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if not np.all(np.isfinite(verts)):
        raise GeometryError("polygon vertices must be finite")
    if _signed_area(verts) <= 0:
        raise GeometryError("polygon must be counterclockwise with positive area")
    for i in range(m):
        p1, p2 = verts[i], verts[(i + 1) % m]
        for j in range(i + 1, m):
            # adjacent edges share a vertex by construction
            if j == i or (j + 1) % m == i or (i + 1) % m == j:
                continue
            if _segments_cross(p1, p2, verts[j], verts[(j + 1) % m]):
                raise GeometryError("polygon is not simple (edges intersect)")


# ----------------------------------------------------------------------------
# Exact quantities
# ----------------------------------------------------------------------------

def unit_ball_volume(n: int) -> float:
    """
    Volume of the unit n-ball via omega_n = omega_{n-2} * 2*pi/n.

    Args:
        n: Dimension >= 1

    Returns:
        pi^{n/2} / Gamma(n/2 + 1)
    """
    if n < 1:
        raise GeometryError(f"unit ball volume needs n >= 1, got {n}")
    if n == 1:
        return 2.0
    if n == 2:
        return math.pi
    return unit_ball_volume(n - 2) * 2.0 * math.pi / n


def volume(d: DomainSpec) -> float:
    """n-volume of the domain"""
    if d.kind == BOX:
        return float(np.prod(d.sides))
    if d.kind == BALL:
        return unit_ball_volume(d.dim) * d.radius ** d.dim
    if d.kind == ELLIPSOID:
        return unit_ball_volume(d.dim) * float(np.prod(d.semiaxes))
    if d.kind == SIMPLEX_H1:
        return 1.0 / d.dim
    if d.kind == HOLDER_CUSP:
        # integral of x^{gamma-1} over (0,1)
        return 1.0 / d.gamma
    return _signed_area(np.asarray(d.vertices, dtype=float))


def diameter(d: DomainSpec) -> float:
    """Euclidean diameter of the closure"""
    if d.kind == BOX:
        return math.sqrt(sum(s * s for s in d.sides))
    if d.kind == BALL:
        return 2.0 * d.radius
    if d.kind == ELLIPSOID:
        return 2.0 * max(d.semiaxes)
    if d.kind in (SIMPLEX_H1, HOLDER_CUSP):
        # closure contains 0 and (1,...,1) and lies in the unit cube
        return math.sqrt(d.dim)
    return float(pdist(np.asarray(d.vertices, dtype=float)).max())


def equal_volume_ball_radius(d: DomainSpec) -> float:
    """Radius R* of the ball with the same n-volume"""
    if d.kind == BALL:
        return d.radius
    return (volume(d) / unit_ball_volume(d.dim)) ** (1.0 / d.dim)


def is_convex(d: DomainSpec) -> bool:
    if d.kind in (BOX, BALL, ELLIPSOID, SIMPLEX_H1):
        return True
    if d.kind == HOLDER_CUSP:
        return all(g == 1.0 for g in d.exponents)
    verts = np.asarray(d.vertices, dtype=float)
    edges = np.roll(verts, -1, axis=0) - verts
    turns = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
    return bool(np.all(turns >= 0))


def bounding_box(d: DomainSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box (lo, hi) containing the closure"""
    n = d.dim
    if d.kind == BOX:
        return np.zeros(n), np.asarray(d.sides, dtype=float)
    if d.kind == BALL:
        return -d.radius * np.ones(n), d.radius * np.ones(n)
    if d.kind == ELLIPSOID:
        half = np.asarray(d.semiaxes, dtype=float)
        return -half, half
    if d.kind in (SIMPLEX_H1, HOLDER_CUSP):
        return np.zeros(n), np.ones(n)
    verts = np.asarray(d.vertices, dtype=float)
    return verts.min(axis=0), verts.max(axis=0)


# ----------------------------------------------------------------------------
# Membership and sampling
# ----------------------------------------------------------------------------

def contains(d: DomainSpec, x) -> np.ndarray:
    """
    Strict-interior membership; boundary points are outside.

    Args:
        d: Domain descriptor
        x: Point of shape (n,) or batch of shape (m, n)

    Returns:
        bool for a single point, bool array for a batch
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d.dim:
        raise GeometryError(f"point dimension {pts.shape[1]} does not match domain dimension {d.dim}")

    if d.kind == BOX:
        inside = np.all((pts > 0) & (pts < np.asarray(d.sides)), axis=1)
    elif d.kind == BALL:
        inside = np.sum(pts ** 2, axis=1) < d.radius ** 2
    elif d.kind == ELLIPSOID:
        inside = np.sum((pts / np.asarray(d.semiaxes)) ** 2, axis=1) < 1.0
    elif d.kind in (SIMPLEX_H1, HOLDER_CUSP):
        xn = pts[:, -1]
        exps = np.ones(d.dim - 1) if d.kind == SIMPLEX_H1 else np.asarray(d.exponents)
        with np.errstate(invalid="ignore"):
            caps = np.power(np.clip(xn, 0.0, None)[:, None], exps[None, :])
        inside = (xn > 0) & (xn < 1) & np.all((pts[:, :-1] > 0) & (pts[:, :-1] < caps), axis=1)
    else:
        inside = _polygon_contains(np.asarray(d.vertices, dtype=float), pts)

    return bool(inside[0]) if single else inside


def _polygon_contains(verts: np.ndarray, pts: np.ndarray) -> np.ndarray:
    inside = PolygonPath(verts).contains_points(pts)
    # drop points on an edge so membership stays strict
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab[None], axis=2) / np.sum(ab * ab, axis=1)[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    dist = np.linalg.norm(pts[:, None, :] - closest, axis=2).min(axis=1)
    scale = float(np.abs(verts).max())
    return inside & (dist > 1e-12 * scale)


def sample_points(d: DomainSpec, density: int, max_points: Optional[int] = None,
                  seed: Optional[int] = None) -> np.ndarray:
    """
    Deterministic stratified-grid interior points.

    Boxes get exactly density^n cell-centred points. Other kinds use a
    cell-centred grid of the bounding box, refined until at least `density`
    points fall inside. Cusp domains also get points approaching the tip
    to within 1/density.

    When the grid holds more than `max_points` cells, a seeded uniform draw
    of `max_points` cell indices over the whole grid replaces it, so the full
    grid is never built.

    Args:
        d: Domain descriptor
        density: Points per axis (>= 1)
        max_points: Cap on grid cells generated per pass (no cap when None)
        seed: Generator seed for the capped draw (DEFAULT_SEED when omitted)

    Returns:
        Array of shape (m, n), every row inside d
    """
    if density < 1:
        raise GeometryError(f"density must be >= 1, got {density}")
    if max_points is not None and max_points < 1:
        raise GeometryError(f"max_points must be >= 1, got {max_points}")
    lo, hi = bounding_box(d)
    per_axis = density
    while True:
        pts = _cell_centres(lo, hi, per_axis, max_points, seed)
        pts = pts[contains(d, pts)]
        if len(pts) >= density or per_axis >= 64 * density or (2 * per_axis) ** d.dim > MAX_GRID_CELLS:
            break
        per_axis *= 2

    if d.kind == HOLDER_CUSP:
        pts = np.vstack([pts, _cusp_tip_points(d, density)])
    return pts


def _cell_centres(lo: np.ndarray, hi: np.ndarray, per_axis: int,
                  max_points: Optional[int] = None, seed: Optional[int] = None) -> np.ndarray:
    n = len(lo)
    step = (hi - lo) / per_axis
    total = per_axis ** n
    if max_points is None or total <= max_points:
        axes = [lo[i] + (np.arange(per_axis) + 0.5) * step[i] for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if total > MAX_GRID_CELLS:
        raise GeometryError(f"sampling grid {per_axis}^{n} exceeds {MAX_GRID_CELLS} cells")
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    flat = np.unique(rng.integers(0, total, size=max_points))
    idx = np.stack(np.unravel_index(flat, (per_axis,) * n), axis=1)
    return lo[None, :] + (idx + 0.5) * step[None, :]


def _cusp_tip_points(d: DomainSpec, density: int) -> np.ndarray:
    """Points on the cusp axis, the closest at distance < 1/density from the tip"""
    exps = np.asarray(d.exponents)
    heights = 0.5 ** np.arange(1, 64)
    heights = heights[heights >= 0.25 / density]
    pts = np.empty((len(heights), d.dim))
    pts[:, -1] = heights
    pts[:, :-1] = 0.5 * heights[:, None] ** exps[None, :]
    return pts[contains(d, pts)]


def monte_carlo_volume(d: DomainSpec, samples: int = 200_000,
                       seed: Optional[int] = None) -> Tuple[float, float]:
    """
    Monte-Carlo volume estimate with its standard error.

    Args:
        d: Domain descriptor
        samples: Number of uniform samples in the bounding box
        seed: Generator seed (DEFAULT_SEED when omitted)

    Returns:
        (estimate, standard error)
    """
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    lo, hi = bounding_box(d)
    pts = lo + rng.random((samples, d.dim)) * (hi - lo)
    frac = float(np.mean(contains(d, pts)))
    box_volume = float(np.prod(hi - lo))
    stderr = box_volume * math.sqrt(max(frac * (1 - frac), 0.0) / samples)
    return box_volume * frac, stderr
