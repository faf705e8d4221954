"""Hodge decomposition, simplicial Fourier transform and frequency responses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import lsqr

from .complex import SimplicialComplex
from .filters import SimplicialFilter, apply_filter, materialize
from .linalg import project_onto, sym_eig

DEFAULT_ZERO_TOL = 1e-8
ORTHO_TOL = 1e-8


class SpectralBasisError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenbases of the harmonic, gradient and curl subspaces of order ``k``.

    Gradient vectors come from the lower Laplacian and curl vectors from the
    upper Laplacian, so coinciding gradient and curl frequencies never mix.
    """

    complex: SimplicialComplex
    k: int
    U_H: np.ndarray
    U_G: np.ndarray
    lam_G: np.ndarray
    U_C: np.ndarray
    lam_C: np.ndarray
    zero_tol: float

    @property
    def U(self) -> np.ndarray:
        return np.hstack([self.U_H, self.U_G, self.U_C])

    @property
    def frequencies(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.U_H.shape[1]), self.lam_G, self.lam_C])

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.U_H.shape[1], self.U_G.shape[1], self.U_C.shape[1]


@dataclass(frozen=True)
class Embedding:
    harmonic: np.ndarray
    gradient: np.ndarray
    curl: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.harmonic, self.gradient, self.curl])


def _positive_block(M, zero_tol: float) -> tuple[np.ndarray, np.ndarray]:
    eig = sym_eig(M)
    lam_max = eig.eigenvalues[-1] if eig.eigenvalues.size else 0.0
    keep = eig.eigenvalues > zero_tol * max(lam_max, 1.0)
    return eig.eigenvectors[:, keep], eig.eigenvalues[keep]


def hodge_basis(X: SimplicialComplex, k: int, zero_tol: float = DEFAULT_ZERO_TOL) -> SpectralBasis:
    lap = X.laplacians(k)
    n = X.N[k]
    U_G, lam_G = _positive_block(lap.lower, zero_tol)
    U_C, lam_C = _positive_block(lap.upper, zero_tol)
    eig = sym_eig(lap.full)
    lam_max = eig.eigenvalues[-1] if n else 0.0
    U_H = eig.eigenvectors[:, eig.eigenvalues <= zero_tol * max(lam_max, 1.0)]

    U = np.hstack([U_H, U_G, U_C])
    if U.shape[1] != n:
        raise SpectralBasisError(f"subspace dimensions {U_H.shape[1]}+{U_G.shape[1]}+{U_C.shape[1]} != {n}")
    err = np.max(np.abs(U.T @ U - np.eye(n)), initial=0.0)
    if err > ORTHO_TOL:
        raise SpectralBasisError(f"Fourier basis not orthonormal (max deviation {err:.3e})")
    return SpectralBasis(X, k, U_H, U_G, lam_G, U_C, lam_C, zero_tol)


def _check_dim(basis: SpectralBasis, n: int) -> None:
    expected = basis.complex.N[basis.k]
    if n != expected:
        raise ValueError(f"length {n} does not match N[{basis.k}] = {expected}")


def sft(basis: SpectralBasis, x: np.ndarray) -> Embedding:
    x = np.asarray(x, dtype=np.float64)
    _check_dim(basis, x.shape[0])
    return Embedding(basis.U_H.T @ x, basis.U_G.T @ x, basis.U_C.T @ x)


def isft(basis: SpectralBasis, e: Embedding) -> np.ndarray:
    _check_dim(basis, len(e.harmonic) + len(e.gradient) + len(e.curl))
    return basis.U_H @ e.harmonic + basis.U_G @ e.gradient + basis.U_C @ e.curl


def hodge_components(X: SimplicialComplex, k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split ``x`` into gradient, curl and harmonic parts.

    Gradient and curl parts are least-squares projections onto im(B_k^T) and
    im(B_{k+1}); the harmonic part is the remainder. No eigendecomposition is
    involved, so this path is independent of :func:`hodge_basis`.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != X.N[k]:
        raise ValueError(f"signal length {x.shape[0]} does not match N[{k}] = {X.N[k]}")
    x_G = np.zeros_like(x)
    x_C = np.zeros_like(x)
    if k >= 1 and X.N[k - 1]:
        Bt = X.incidence(k).T.astype(np.float64)
        x_G = Bt @ _lstsq(Bt, x)
    if k < X.K and X.N[k + 1]:
        B = X.incidence(k + 1).astype(np.float64)
        x_C = B @ _lstsq(B, x)
    return x_G, x_C, x - x_G - x_C


def _lstsq(A, b: np.ndarray) -> np.ndarray:
    if A.shape[1] <= 2000:
        return np.linalg.lstsq(A.toarray(), b, rcond=None)[0]
    return lsqr(A, b, atol=1e-14, btol=1e-14, iter_lim=20 * A.shape[1])[0]


@dataclass(frozen=True)
class FrequencyResponse:
    harmonic: np.ndarray
    gradient: np.ndarray
    curl: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.harmonic, self.gradient, self.curl])


def _poly(c: np.ndarray, lam: np.ndarray) -> np.ndarray:
    out = np.zeros_like(lam, dtype=np.float64)
    for l, a in enumerate(c, start=1):
        out = out + a * lam**l
    return out


def frequency_response(h: SimplicialFilter, basis: SpectralBasis) -> FrequencyResponse:
    """Response of ``h`` at every frequency, aligned with ``basis.U`` columns."""
    lam_G = np.asarray(basis.lam_G, dtype=np.float64)
    lam_C = np.asarray(basis.lam_C, dtype=np.float64)
    return FrequencyResponse(
        np.full(basis.U_H.shape[1], h.epsilon),
        h.epsilon + _poly(h.alpha, lam_G),
        h.epsilon + _poly(h.beta, lam_C),
    )


def spectral_theorem_residual(h: SimplicialFilter, basis: SpectralBasis) -> float:
    """max |U^T H U - diag(response)| for the densely materialized filter."""
    H = materialize(basis.complex, basis.k, h)
    U = basis.U
    D = U.T @ H @ U
    return float(np.max(np.abs(D - np.diag(frequency_response(h, basis).concat())), initial=0.0))


def layer_spectral_check(h: SimplicialFilter, basis: SpectralBasis, x: np.ndarray) -> float:
    """max_i |SFT(Hx)_i - response_i * SFT(x)_i|."""
    z = apply_filter(basis.complex, basis.k, h, x)
    lhs = sft(basis, z).concat()
    rhs = frequency_response(h, basis).concat() * sft(basis, x).concat()
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def subspace_residual(U_S: np.ndarray, V: np.ndarray) -> float:
    """Largest distance of a column of ``V`` from span(U_S)."""
    if V.size == 0:
        return 0.0
    return float(np.max(np.abs(V - project_onto(U_S, V))))
