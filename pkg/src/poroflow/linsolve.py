"""Sparse direct solves for the symmetric indefinite saddle-point systems.

The matrix is symmetrically equilibrated (Ruiz scaling) before an LU
factorization with SuperLU, so that the pivot-size test below compares
quantities of the same order regardless of the physical units of each block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm, splu

PIVOT_TOL = 1e-12


class SingularSystemError(RuntimeError):
    """Raised when a pivot vanishes; ``dof`` / ``label`` identify the unknown involved."""

    def __init__(self, message, dof=None, label=None, pivot=None):
        super().__init__(message)
        self.dof = dof
        self.label = label
        self.pivot = pivot


def saddle_matrix(Mbar, Mf, Abar, Qbar, Bbar) -> sp.csc_matrix:
    """``[[Mbar, Mf, -Qbar], [Mf^T, Abar, -Bbar], [-Qbar^T, -Bbar^T, 0]]``."""
    n_el = Qbar.shape[1]
    return sp.bmat(
        [
            [Mbar, Mf, -Qbar],
            [Mf.T, Abar, -Bbar],
            [-Qbar.T, -Bbar.T, sp.csr_matrix((n_el, n_el))],
        ],
        format="csc",
    )


def equilibrate(A, passes: int = 10) -> np.ndarray:
    """Diagonal ``d`` such that ``diag(d) A diag(d)`` has rows of max-norm close to 1."""
    A = sp.csr_matrix(A)
    absA = abs(A)
    d = np.ones(A.shape[0])
    for _ in range(passes):
        S = sp.diags(d) @ absA @ sp.diags(d)
        r = np.sqrt(S.max(axis=1).toarray().ravel())
        r[r == 0] = 1.0
        d /= r
        if np.all(np.abs(r - 1) < 1e-3):
            break
    return d


@dataclass
class Factorization:
    lu: object
    scale: np.ndarray
    matrix: sp.csc_matrix
    refine: int = 1

    @property
    def shape(self):
        return self.matrix.shape

    def solve(self, rhs) -> np.ndarray:
        return solve(self, rhs)


def factor(A, labels=None, pivot_tol: float = PIVOT_TOL, refine: int = 1) -> Factorization:
    """LU-factor a square sparse matrix; raise ``SingularSystemError`` on a vanishing pivot.

    A pivot is declared zero when ``|U_kk| < pivot_tol * max_k |U_kk|`` on the
    equilibrated matrix.
    """
    A = sp.csc_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    d = equilibrate(A)
    As = sp.csc_matrix(sp.diags(d) @ A @ sp.diags(d))
    try:
        lu = splu(As, permc_spec="COLAMD")
    except RuntimeError as exc:  # SuperLU: "Factor is exactly singular"
        raise SingularSystemError(f"singular matrix: {exc}") from exc
    piv = np.abs(lu.U.diagonal())
    k = int(np.argmin(piv))
    if piv[k] < pivot_tol * piv.max():
        j = int(np.flatnonzero(lu.perm_c == k)[0])
        label = labels[j] if labels is not None else f"unknown {j}"
        raise SingularSystemError(
            f"near-zero pivot {piv[k]:.3e} (relative {piv[k] / piv.max():.3e}) at {label}",
            dof=j,
            label=label,
            pivot=float(piv[k]),
        )
    return Factorization(lu=lu, scale=d, matrix=A, refine=refine)


def solve(f: Factorization, rhs) -> np.ndarray:
    """Solve with the factorization, plus ``f.refine`` steps of iterative refinement."""
    b = np.asarray(rhs, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    d = f.scale
    x = d * f.lu.solve(d * b)
    for _ in range(f.refine):
        r = b - f.matrix @ x
        x = x + d * f.lu.solve(d * r)
    return x


def relative_residual(A, x, b) -> float:
    """``||b - A x|| / (||A|| ||x|| + ||b||)`` with the Frobenius norm of ``A``."""
    r = np.linalg.norm(b - A @ x)
    den = sparse_norm(A) * np.linalg.norm(x) + np.linalg.norm(b)
    return float(r / den) if den > 0 else 0.0
