"""
Cell-centred finite differences for the Neumann Laplacian
Boxes through Kronecker sums of 1D reflecting chains, general 3D domains through voxels
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

import sys
sys.path.append('src')

from geometry.domains import DEFAULT_SEED, DomainSpec, BOX, bounding_box, contains
from oracle.eigensolver import FD_BOX, FD_VOXEL_3D, SpectrumResult, smallest_eigs
from utils.errors import EigensolverError, GeometryError, ValidityError

logger = logging.getLogger(__name__)

MIN_BOX_CELLS = 8
MIN_VOXEL_CELLS = 32
MIN_VOXELS = 100


def neumann_chain(cells: int, h: float) -> sparse.csr_matrix:
    """1D reflecting second difference: tridiag(-1, [1, 2, ..., 2, 1], -1) / h^2"""
    main = np.full(cells, 2.0)
    main[0] = main[-1] = 1.0
    off = -np.ones(cells - 1)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr") / h ** 2


def fd_box_operators(d: DomainSpec, cells_per_axis: int) -> Tuple[sparse.csr_matrix, np.ndarray, float]:
    """
    Stiffness, diagonal mass and mesh size of the box discretisation.

    Both operators carry the cell volume so that K v = mu M v is the
    Rayleigh-Ritz form of the weak problem.

    Returns:
        (K, diagonal of M, h = largest cell side)
    """
    if d.kind != BOX or d.dim not in (2, 3):
        raise GeometryError(f"fd_box needs a 2D or 3D Box, got {d.label()}")
    if cells_per_axis < MIN_BOX_CELLS:
        raise ValidityError(f"fd_box needs at least {MIN_BOX_CELLS} cells per axis, got {cells_per_axis}")
    steps = [s / cells_per_axis for s in d.sides]
    cell_volume = float(np.prod(steps))
    eye = sparse.identity(cells_per_axis, format="csr")
    K = None
    for axis, h in enumerate(steps):
        # L = kron(Dxx, I, I) + kron(I, Dyy, I) + kron(I, I, Dzz)
        factors = [neumann_chain(cells_per_axis, h) if i == axis else eye for i in range(d.dim)]
        term = factors[0]
        for f in factors[1:]:
            term = sparse.kron(term, f, format="csr")
        K = term if K is None else K + term
    dof = cells_per_axis ** d.dim
    return (cell_volume * K).tocsr(), np.full(dof, cell_volume), max(steps)


def fd_box(d: DomainSpec, cells_per_axis: int, k: int = 1, tol: float = 1e-8,
           direct_dof_limit: int = 60_000, seed: int = DEFAULT_SEED) -> SpectrumResult:
    """
    k smallest nontrivial Neumann eigenvalues of a box.

    Args:
        d: Box, n in {2, 3}
        cells_per_axis: Cells along every axis (>= 8)
        k: Number of nontrivial eigenvalues

    Returns:
        SpectrumResult tagged fd-box
    """
    K, m, h = fd_box_operators(d, cells_per_axis)
    if k >= len(m):
        raise EigensolverError(f"requested k={k} eigenvalues from {len(m)} degrees of freedom")
    result = smallest_eigs(K, m, k, tol=tol, h=h, method=FD_BOX,
                           direct_dof_limit=direct_dof_limit, seed=seed)
    logger.info("fd_box %s N=%d: mu1=%.10g", d.label(), cells_per_axis, result.eigenvalues[min(1, k)])
    return result


def voxel_operators(d: DomainSpec, cells: int) -> Tuple[sparse.csr_matrix, np.ndarray, float, int]:
    """
    Graph Laplacian of the interior voxels of a 3D domain.

    A voxel belongs to the domain when its centre does. Faces shared by two
    member voxels carry the weight V/h_i^2; faces toward non-members are
    reflecting. Only the largest face-connected component is kept.

    Returns:
        (K, diagonal of M, h, number of dropped voxels)
    """
    if d.dim != 3:
        raise GeometryError(f"voxel oracle needs a 3D domain, got {d.label()}")
    if cells < MIN_VOXEL_CELLS:
        raise ValidityError(f"voxel oracle needs at least {MIN_VOXEL_CELLS} cells per axis, got {cells}")
    lo, hi = bounding_box(d)
    steps = (hi - lo) / cells
    axes = [lo[i] + (np.arange(cells) + 0.5) * steps[i] for i in range(3)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    inside = contains(d, grid).reshape(cells, cells, cells)
    count = int(inside.sum())
    if count < MIN_VOXELS:
        raise EigensolverError(f"domain under-resolved: {count} interior voxels at {cells} cells per axis")

    index = -np.ones(inside.shape, dtype=np.int64)
    index[inside] = np.arange(count)
    cell_volume = float(np.prod(steps))
    rows, cols, weights = [], [], []
    for axis in range(3):
        lead = [slice(None)] * 3
        trail = [slice(None)] * 3
        lead[axis] = slice(0, -1)
        trail[axis] = slice(1, None)
        both = inside[tuple(lead)] & inside[tuple(trail)]
        a = index[tuple(lead)][both]
        b = index[tuple(trail)][both]
        rows.append(a)
        cols.append(b)
        weights.append(np.full(len(a), cell_volume / steps[axis] ** 2))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    weights = np.concatenate(weights)
    adjacency = sparse.coo_matrix((weights, (rows, cols)), shape=(count, count)).tocsr()
    adjacency = adjacency + adjacency.T

    n_comp, labels = connected_components(adjacency, directed=False)
    dropped = 0
    if n_comp > 1:
        keep = labels == np.argmax(np.bincount(labels))
        dropped = int(count - keep.sum())
        adjacency = adjacency[keep][:, keep]
        count = int(keep.sum())
        if count < MIN_VOXELS:
            raise EigensolverError(f"domain under-resolved: largest voxel component has {count} voxels")

    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    K = (sparse.diags(degree) - adjacency).tocsr()
    return K, np.full(count, cell_volume), float(steps.max()), dropped


def fd_voxel_3d(d: DomainSpec, cells: int, k: int = 1, tol: float = 1e-8,
                direct_dof_limit: int = 60_000, seed: int = DEFAULT_SEED) -> SpectrumResult:
    """
    Voxelised Neumann eigenvalues of a 3D domain (staircase boundary).

    Args:
        d: 3D domain, typically a HolderCusp
        cells: Cells per bounding-box axis (>= 32)
        k: Number of nontrivial eigenvalues

    Returns:
        SpectrumResult tagged fd-voxel-3d, marked indicative
    """
    K, m, h, dropped = voxel_operators(d, cells)
    result = smallest_eigs(K, m, k, tol=tol, h=h, method=FD_VOXEL_3D,
                           direct_dof_limit=direct_dof_limit, seed=seed)
    result.notes.append("indicative: staircase boundary, first order at best")
    if dropped:
        result.notes.append(f"{dropped} voxel(s) outside the largest connected component dropped")
    logger.info("fd_voxel_3d %s N=%d dof=%d: mu1=%.10g", d.label(), cells, result.dof,
                result.eigenvalues[min(1, k)])
    return result


def exact_box_mu1(d: DomainSpec, cells_per_axis: int) -> float:
    """Discrete first eigenvalue 4 N^2 sin^2(pi/(2N)) / s_max^2 of the box scheme"""
    n = cells_per_axis
    return 4.0 * n ** 2 * math.sin(math.pi / (2 * n)) ** 2 / max(d.sides) ** 2
