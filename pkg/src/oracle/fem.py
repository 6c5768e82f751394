"""
Linear (P1) finite elements for the planar Neumann Laplacian

Discs come from a structured ring mesh, ellipses push that mesh through the
diagonal map, polygons are ear-clipped and refined uniformly.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import sparse

import sys
sys.path.append('src')

from geometry.domains import DEFAULT_SEED, DomainSpec, BALL, BOX, ELLIPSOID, POLYGON_2D
from oracle.eigensolver import FEM_P1_2D, SpectrumResult, smallest_eigs
from utils.errors import EigensolverError, GeometryError, ValidityError

logger = logging.getLogger(__name__)

MAX_ASPECT = 1e6
MAX_REFINEMENTS = 12


def _orient(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Reorder every triangle counterclockwise"""
    p0, p1, p2 = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    cross = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    tris = tris.copy()
    flip = cross < 0
    tris[flip, 1], tris[flip, 2] = tris[flip, 2], tris[flip, 1].copy()
    return tris


def disc_mesh(radius: float, rings: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Structured triangulation of the disc of given radius.

    Ring j (1..rings) carries 6j equally spaced nodes at radius*j/rings; the
    first ring is a fan around the centre, later rings are zipped to the
    previous one by angle.

    Returns:
        (points (m, 2), triangles (t, 3))
    """
    if rings < 1:
        raise ValidityError(f"disc mesh needs at least one ring, got {rings}")
    points = [np.zeros((1, 2))]
    ring_index = [np.array([0])]
    ring_angles = [np.array([0.0])]
    start = 1
    for j in range(1, rings + 1):
        theta = 2.0 * math.pi * np.arange(6 * j) / (6 * j)
        rho = radius * j / rings
        points.append(np.column_stack([rho * np.cos(theta), rho * np.sin(theta)]))
        ring_index.append(np.arange(start, start + 6 * j))
        ring_angles.append(theta)
        start += 6 * j

    tris = []
    first = ring_index[1]
    for i in range(len(first)):
        tris.append((0, first[i], first[(i + 1) % len(first)]))
    for j in range(2, rings + 1):
        inner, outer = ring_index[j - 1], ring_index[j]
        t_in = np.append(ring_angles[j - 1], 2.0 * math.pi)
        t_out = np.append(ring_angles[j], 2.0 * math.pi)
        i = o = 0
        while i < len(inner) or o < len(outer):
            # ties advance the outer ring
            if o < len(outer) and (i >= len(inner) or t_out[o + 1] <= t_in[i + 1] + 1e-12):
                tris.append((inner[i % len(inner)], outer[o], outer[(o + 1) % len(outer)]))
                o += 1
            else:
                tris.append((inner[i], outer[o % len(outer)], inner[(i + 1) % len(inner)]))
                i += 1
    pts = np.vstack(points)
    return pts, _orient(pts, np.asarray(tris, dtype=np.int64))


def map_mesh(points: np.ndarray, coefficients) -> np.ndarray:
    """Push mesh nodes through the diagonal linear map x -> (c_1 x_1, c_2 x_2)"""
    return np.asarray(points, dtype=float) * np.asarray(coefficients, dtype=float)[None, :]


def _is_ear(verts: np.ndarray, ring: list, k: int) -> bool:
    a, b, c = verts[ring[k - 1]], verts[ring[k]], verts[ring[(k + 1) % len(ring)]]
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    scale = max(np.ptp(verts[:, 0]), np.ptp(verts[:, 1])) ** 2
    if cross <= 1e-14 * scale:
        return False
    corners = ((k - 1) % len(ring), k, (k + 1) % len(ring))
    others = [ring[m] for m in range(len(ring)) if m not in corners]
    if not others:
        return True
    p = verts[others]

    def side(u, v):
        return (v[0] - u[0]) * (p[:, 1] - u[1]) - (v[1] - u[1]) * (p[:, 0] - u[0])

    # boundary counts as inside
    inside = (side(a, b) >= 0) & (side(b, c) >= 0) & (side(c, a) >= 0)
    return not bool(inside.any())


def ear_clip(vertices) -> np.ndarray:
    """
    Triangulate a simple counterclockwise polygon by ear clipping.

    Returns:
        Triangles (m-2, 3) indexing the vertex list
    """
    verts = np.asarray(vertices, dtype=float)
    ring = list(range(len(verts)))
    tris = []
    while len(ring) > 3:
        for k in range(len(ring)):
            if _is_ear(verts, ring, k):
                tris.append((ring[k - 1], ring[k], ring[(k + 1) % len(ring)]))
                del ring[k]
                break
        else:
            raise GeometryError("ear clipping found no ear (degenerate polygon)")
    tris.append(tuple(ring))
    return np.asarray(tris, dtype=np.int64)


def edge_lengths(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """(t, 3) lengths of the edges opposite each vertex"""
    p = points[tris]
    return np.linalg.norm(np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1), axis=2)


def refine(points: np.ndarray, tris: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One uniform red refinement: every triangle splits into four similar ones"""
    edges = np.sort(np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    unique, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    mids = 0.5 * (points[unique[:, 0]] + points[unique[:, 1]])
    m = len(points) + inverse.reshape(3, -1).T
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = m[:, 0], m[:, 1], m[:, 2]
    children = np.concatenate([
        np.column_stack([a, ab, ca]),
        np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]),
        np.column_stack([ab, bc, ca]),
    ])
    return np.vstack([points, mids]), children


def polygon_mesh(vertices, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ear-clipped triangulation refined until no edge is longer than h.

    Returns:
        (points, triangles)
    """
    if not h > 0:
        raise ValidityError(f"mesh size must be positive, got {h}")
    points = np.asarray(vertices, dtype=float)
    tris = ear_clip(points)
    for _ in range(MAX_REFINEMENTS):
        if edge_lengths(points, tris).max() <= h:
            break
        points, tris = refine(points, tris)
    else:
        raise ValidityError(f"mesh size {h:g} needs more than {MAX_REFINEMENTS} refinements")
    return points, tris


def assemble_p1(points: np.ndarray, tris: np.ndarray) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """
    P1 stiffness and consistent mass.

    Per triangle of area A with edge vectors e_i opposite vertex i:
        K_ij = e_i . e_j / (4A),  M_ij = A (1 + delta_ij) / 12

    Returns:
        (K, M) in CSR format
    """
    p = points[tris]
    e = np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1)
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    if np.any(area <= 0):
        raise GeometryError(f"{int(np.sum(area <= 0))} triangle(s) with non-positive area")
    aspect = np.sum(e ** 2, axis=2).max(axis=1) / (2.0 * area)
    if aspect.max() > MAX_ASPECT:
        raise GeometryError(f"degenerate triangle: aspect ratio {aspect.max():.3g}")

    k_loc = np.einsum("tid,tjd->tij", e, e) / (4.0 * area)[:, None, None]
    m_loc = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    size = len(points)
    K = sparse.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    M = sparse.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    return K, M


def mesh_domain(d: DomainSpec, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Triangulate a planar domain at mesh size h"""
    if d.dim != 2:
        raise GeometryError(f"fem_p1_2d needs a planar domain, got {d.label()}")
    if not h > 0:
        raise ValidityError(f"mesh size must be positive, got {h}")
    if d.kind == BALL:
        return disc_mesh(d.radius, math.ceil(d.radius / h))
    if d.kind == ELLIPSOID:
        points, tris = disc_mesh(1.0, math.ceil(max(d.semiaxes) / h))
        return map_mesh(points, d.semiaxes), tris
    if d.kind == BOX:
        sx, sy = d.sides
        return polygon_mesh([(0, 0), (sx, 0), (sx, sy), (0, sy)], h)
    if d.kind == POLYGON_2D:
        return polygon_mesh(d.vertices, h)
    raise GeometryError(f"fem_p1_2d cannot mesh {d.kind}")


def fem_p1_2d(d: DomainSpec, h: float, k: int = 1, tol: float = 1e-8,
              direct_dof_limit: int = 60_000, seed: int = DEFAULT_SEED) -> SpectrumResult:
    """
    k smallest nontrivial Neumann eigenvalues by P1 finite elements.

    Args:
        d: Ball or Ellipsoid with n = 2, Box with n = 2, or Polygon2D
        h: Target mesh size
        k: Number of nontrivial eigenvalues

    Returns:
        SpectrumResult tagged fem-p1-2d; h is the longest mesh edge
    """
    points, tris = mesh_domain(d, h)
    K, M = assemble_p1(points, tris)
    if k >= len(points):
        raise EigensolverError(f"requested k={k} eigenvalues from {len(points)} degrees of freedom")
    h_mesh = float(edge_lengths(points, tris).max())
    result = smallest_eigs(K, M, k, tol=tol, h=h_mesh, method=FEM_P1_2D,
                           direct_dof_limit=direct_dof_limit, seed=seed)
    logger.info("fem_p1_2d %s h=%.4g dof=%d: mu1=%.10g", d.label(), h_mesh, result.dof,
                result.eigenvalues[min(1, k)])
    return result
