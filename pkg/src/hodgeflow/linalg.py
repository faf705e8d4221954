"""Thin linear-algebra layer: sparse products, symmetric eigensolver, projections.

Sparse matrices are :class:`scipy.sparse.csr_matrix`; dense eigendecomposition
goes through LAPACK (``numpy.linalg.eigh``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SYMMETRY_TOL = 1e-10


def as_csr(A) -> sp.csr_matrix:
    """CSR copy of ``A`` in float64 with sorted indices and no stored zeros."""
    M = sp.csr_matrix(A, dtype=np.float64)
    M.eliminate_zeros()
    M.sort_indices()
    return M


def spmv(A: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} times vector of length {x.shape[0]}")
    return np.asarray(A @ x)


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(A) -> EigenResult:
    """Eigendecomposition of a dense symmetric matrix, eigenvalues ascending."""
    if sp.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    asym = np.max(np.abs(A - A.T), initial=0.0)
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    if A.shape[0] == 0:
        return EigenResult(np.zeros(0), np.zeros((0, 0)))
    w, Q = np.linalg.eigh(A)
    return EigenResult(w, Q)


def project_onto(U: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection U U^T x onto the span of orthonormal columns U."""
    U = np.asarray(U, dtype=np.float64)
    return U @ (U.T @ np.asarray(x, dtype=np.float64))
