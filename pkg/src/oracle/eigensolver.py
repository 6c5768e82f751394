"""
Generalized symmetric eigensolver for discrete Neumann problems K v = mu M v

The constant vector spans the kernel of K. It is deflated explicitly: the
dense path restricts to an orthonormal basis of its M-orthogonal complement,
larger systems run shift-invert Lanczos (ARPACK) with an inverse operator
that projects the constant mode out. The shifted system is factorised exactly
up to the direct limit and solved by multigrid-preconditioned CG above it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import pyamg
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, cg, eigsh, splu

import sys
sys.path.append('src')

from geometry.domains import DEFAULT_SEED
from utils.errors import EigensolverError

logger = logging.getLogger(__name__)

FD_BOX = "fd-box"
FEM_P1_2D = "fem-p1-2d"
FD_VOXEL_3D = "fd-voxel-3d"

DENSE_LIMIT = 400
# inner CG solves run this much tighter than the reported eigen-residual
INNER_TOL_RATIO = 1e-3


@dataclass
class SpectrumResult:
    """k+1 smallest generalized eigenvalues, the deflated zero mode first"""

    eigenvalues: np.ndarray
    h: float
    method: str
    residuals: np.ndarray
    dof: int
    notes: List[str] = field(default_factory=list)
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def mu1(self) -> float:
        if len(self.eigenvalues) < 2:
            raise EigensolverError("spectrum holds the zero mode only")
        return float(self.eigenvalues[1])


def stiffness_row_sums(K) -> np.ndarray:
    """K applied to the constant vector"""
    return np.asarray(K @ np.ones(K.shape[0])).ravel()


def relative_residuals(K, M, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """||Kv - mu Mv|| / (||Kv|| + mu ||Mv||) per column"""
    kv = K @ vectors
    mv = M @ vectors
    num = np.linalg.norm(kv - mv * values[None, :], axis=0)
    den = np.linalg.norm(kv, axis=0) + values * np.linalg.norm(mv, axis=0)
    return num / np.where(den > 0, den, 1.0)


def _as_mass(M, n: int):
    if sparse.issparse(M):
        return M.tocsr()
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        return sparse.diags(arr, format="csr")
    return sparse.csr_matrix(arr)


def _check_operators(K, M) -> None:
    scale = abs(K).max()
    if abs(K - K.T).max() > 1e-12 * scale:
        raise EigensolverError("stiffness matrix is not symmetric")
    if abs(M - M.T).max() > 1e-12 * abs(M).max():
        raise EigensolverError("mass matrix is not symmetric")
    if np.any(M.diagonal() <= 0):
        raise EigensolverError("mass matrix is indefinite (non-positive diagonal)")


def _zero_mode(K, M, n: int):
    ones = np.ones(n)
    c = ones / math.sqrt(float(ones @ (M @ ones)))
    kc = K @ c
    mu0 = max(float(c @ kc), 0.0)
    k_norm = float(abs(K).sum(axis=1).max())
    res0 = float(np.linalg.norm(kc) / (k_norm * np.linalg.norm(c))) if k_norm > 0 else 0.0
    return c, mu0, res0


def _dense(K, M, c: np.ndarray, k: int):
    Kd = K.toarray()
    Md = M.toarray()
    basis = scipy.linalg.null_space((Md @ c)[None, :])
    try:
        vals, vecs = scipy.linalg.eigh(basis.T @ Kd @ basis, basis.T @ Md @ basis,
                                       subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense generalized eigensolve failed: {exc}") from exc
    return vals, basis @ vecs, []


def _shift(K, M) -> float:
    return 1e-4 * float(np.mean(K.diagonal())) / float(np.mean(M.diagonal()))


def _direct_solver(A):
    lu = splu(A.tocsc())
    return lambda b: lu.solve(b), []


def _multigrid_solver(A, tol: float, maxiter: int):
    """Conjugate gradients preconditioned by one smoothed-aggregation V-cycle"""
    n = A.shape[0]
    hierarchy = pyamg.smoothed_aggregation_solver(A.tocsr(), B=np.ones((n, 1)))
    precond = hierarchy.aspreconditioner(cycle="V")
    trace: List[float] = []

    def solve(b: np.ndarray) -> np.ndarray:
        iterations = [0]

        def count(_):
            iterations[0] += 1

        x, info = cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=count)
        trace.append(float(iterations[0]))
        if info != 0:
            raise EigensolverError(f"multigrid CG did not reach {tol:g} in {maxiter} iterations", trace)
        return x

    logger.debug("multigrid hierarchy: %d levels, operator complexity %.2f",
                 len(hierarchy.levels), hierarchy.operator_complexity())
    return solve, trace


def _shift_invert(K, M, c: np.ndarray, k: int, seed: int, solver, arpack_tol: float = 0.0):
    """ARPACK shift-invert about -shift; the inverse operator removes the constant mode"""
    n = K.shape[0]
    shift = _shift(K, M)
    solve, trace = solver(K + shift * M)
    mc = M @ c

    def project(x: np.ndarray) -> np.ndarray:
        return x - c * float(mc @ x)

    opinv = LinearOperator((n, n), matvec=lambda x: project(solve(np.ravel(x))), dtype=float)
    v0 = project(np.random.default_rng(seed).standard_normal(n))
    try:
        vals, vecs = eigsh(K, k=k, M=M, sigma=-shift, which="LM", OPinv=opinv, v0=v0, tol=arpack_tol)
    except ArpackNoConvergence as exc:
        raise EigensolverError(f"ARPACK did not converge: {exc}", trace) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order], trace


def smallest_eigs(K, M: Union[np.ndarray, sparse.spmatrix], k: int, tol: float = 1e-8,
                  h: float = math.nan, method: str = "", direct_dof_limit: int = 60_000,
                  seed: int = DEFAULT_SEED, maxiter: int = 500) -> SpectrumResult:
    """
    k nontrivial smallest eigenpairs of K v = mu M v plus the zero mode.

    Args:
        K: Symmetric positive semidefinite stiffness with the constants as kernel
        M: Symmetric positive definite mass, sparse or its diagonal
        k: Number of nontrivial eigenvalues (0 returns the zero mode only)
        tol: Relative residual every reported pair must meet
        h: Mesh parameter recorded in the result
        method: Discretisation tag
        direct_dof_limit: Largest size factorised exactly; larger systems
            use multigrid-preconditioned CG inner solves
        seed: Starting-vector seed
        maxiter: CG iteration cap per inner solve

    Returns:
        SpectrumResult with k+1 ascending eigenvalues
    """
    K = sparse.csr_matrix(K)
    n = K.shape[0]
    M = _as_mass(M, n)
    if k < 0 or k >= n:
        raise EigensolverError(f"requested k={k} eigenvalues from {n} degrees of freedom")
    _check_operators(K, M)

    c, mu0, res0 = _zero_mode(K, M, n)
    values = np.array([mu0])
    vectors = c[:, None]
    residuals = np.array([res0])

    if k > 0:
        if n <= DENSE_LIMIT or k >= n - 2:
            vals, vecs, trace = _dense(K, M, c, k)
        elif n <= direct_dof_limit:
            vals, vecs, trace = _shift_invert(K, M, c, k, seed, _direct_solver)
        else:
            inner_tol = INNER_TOL_RATIO * tol
            vals, vecs, trace = _shift_invert(K, M, c, k, seed,
                                              lambda A: _multigrid_solver(A, inner_tol, maxiter), inner_tol)
        res = relative_residuals(K, M, vals, vecs)
        logger.debug("eigensolve n=%d k=%d: residuals %s", n, k, np.array2string(res, precision=2))
        if np.any(vals < 0) and np.min(vals) < -tol * np.max(np.abs(vals)):
            raise EigensolverError("negative eigenvalue: stiffness is not semidefinite", list(res))
        if np.any(res >= tol):
            raise EigensolverError(f"residual {res.max():.3e} above tolerance {tol:g}", trace + list(res))
        values = np.concatenate([values, np.clip(vals, 0.0, None)])
        vectors = np.hstack([vectors, vecs])
        residuals = np.concatenate([residuals, res])

    if res0 >= tol:
        raise EigensolverError(f"constant vector is not in the kernel (residual {res0:.3e})", [res0])
    return SpectrumResult(eigenvalues=values, h=h, method=method, residuals=residuals,
                          dof=n, eigenvectors=vectors)
