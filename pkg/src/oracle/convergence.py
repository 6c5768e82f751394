"""
Convergence helpers and spectrum/operator dumps
"""

import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import scipy.io

import sys
sys.path.append('src')

from oracle.eigensolver import SpectrumResult
from utils.errors import ValidityError


def richardson(mu_h: float, mu_h2: float, order: int) -> float:
    """
    Richardson extrapolation from meshes h and h/2.

    Args:
        mu_h: Value at mesh size h
        mu_h2: Value at mesh size h/2
        order: Convergence order of the scheme (>= 1)

    Returns:
        (2^order mu_h2 - mu_h) / (2^order - 1)
    """
    if order < 1:
        raise ValidityError(f"Richardson order must be >= 1, got {order}")
    w = 2.0 ** order
    return (w * mu_h2 - mu_h) / (w - 1.0)


def richardson_error(mu_h: float, mu_h2: float, order: int) -> float:
    """Error estimate |richardson - mu_h2| of the finer value"""
    return abs(richardson(mu_h, mu_h2, order) - mu_h2)


def convergence_order(coarse: float, mid: float, fine: float) -> float:
    """Observed order log2(|mid - coarse| / |fine - mid|) from three halvings"""
    num = abs(mid - coarse)
    den = abs(fine - mid)
    if den == 0 or num == 0:
        return math.inf
    return math.log2(num / den)


def observed_order(mu_h: float, mu_h2: float, exact: float) -> float:
    """Observed order log2(|mu_h - exact| / |mu_h2 - exact|) against a known value"""
    e1 = abs(mu_h - exact)
    e2 = abs(mu_h2 - exact)
    if e2 == 0:
        return math.inf
    return math.log2(e1 / e2)


def spectrum_table(results: Sequence[SpectrumResult]) -> pd.DataFrame:
    """
    Eigenvalue table with columns h, dof, mu0..muk, res0..resk.

    Results with fewer eigenvalues are padded with NaN.
    """
    if not results:
        return pd.DataFrame(columns=["h", "dof"])
    width = max(len(r.eigenvalues) for r in results)
    rows = []
    for r in results:
        row = {"h": r.h, "dof": r.dof}
        for j in range(width):
            row[f"mu{j}"] = float(r.eigenvalues[j]) if j < len(r.eigenvalues) else math.nan
        for j in range(width):
            row[f"res{j}"] = float(r.residuals[j]) if j < len(r.residuals) else math.nan
        rows.append(row)
    return pd.DataFrame(rows)


def write_operator(A, path: str, comment: Optional[str] = None) -> None:
    """Dump a symmetric sparse operator in Matrix Market coordinate format"""
    scipy.io.mmwrite(path, A.tocoo() if hasattr(A, "tocoo") else np.asarray(A),
                     comment=comment or "", field="real", symmetry="symmetric")
