"""Simplicial convolutional filters.

A filter on k-simplices is the matrix polynomial

    H = eps * I + sum_l alpha[l-1] * L_lower^l + sum_l beta[l-1] * L_upper^l

applied through repeated one-hop shifts, never by forming matrix powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import SimplicialComplex
from .linalg import spmv


@dataclass(frozen=True)
class SimplicialFilter:
    epsilon: float
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "epsilon", float(self.epsilon))
        for name in ("alpha", "beta"):
            v = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def orders(self) -> tuple[int, int]:
        return len(self.alpha), len(self.beta)

    @property
    def length(self) -> int:
        return 1 + len(self.alpha) + len(self.beta)

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "alpha": self.alpha.tolist(), "beta": self.beta.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SimplicialFilter":
        return cls(obj["epsilon"], obj.get("alpha", []), obj.get("beta", []))


def _check_length(X: SimplicialComplex, k: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != X.N[k]:
        raise ValueError(f"signal length {x.shape[0]} does not match N[{k}] = {X.N[k]}")
    return x


def shift_lower(X: SimplicialComplex, k: int, x: np.ndarray) -> np.ndarray:
    x = _check_length(X, k, x)
    return spmv(X.laplacians(k).lower, x)


def shift_upper(X: SimplicialComplex, k: int, x: np.ndarray) -> np.ndarray:
    x = _check_length(X, k, x)
    return spmv(X.laplacians(k).upper, x)


def apply_filter(X: SimplicialComplex, k: int, h: SimplicialFilter, x: np.ndarray) -> np.ndarray:
    x = _check_length(X, k, x)
    y = h.epsilon * x
    z = x
    for a in h.alpha:
        z = shift_lower(X, k, z)
        y = y + a * z
    z = x
    for b in h.beta:
        z = shift_upper(X, k, z)
        y = y + b * z
    return y


def materialize(X: SimplicialComplex, k: int, h: SimplicialFilter) -> np.ndarray:
    """Dense matrix of ``h``, built from explicit matrix powers (test oracle)."""
    lap = X.laplacians(k)
    Ll, Lu = lap.lower.toarray(), lap.upper.toarray()
    n = X.N[k]
    H = h.epsilon * np.eye(n)
    for l, a in enumerate(h.alpha, start=1):
        H += a * np.linalg.matrix_power(Ll, l)
    for l, b in enumerate(h.beta, start=1):
        H += b * np.linalg.matrix_power(Lu, l)
    return H


def snn_filter(h_coeffs) -> SimplicialFilter:
    """Filter sum_l h[l] L^l expressed with tied lower/upper coefficients.

    Valid because L_lower L_upper = 0, so (L_lower + L_upper)^l splits into
    L_lower^l + L_upper^l for l >= 1.
    """
    h = np.asarray(h_coeffs, dtype=np.float64).reshape(-1)
    if h.size == 0:
        raise ValueError("need at least the zeroth coefficient")
    return SimplicialFilter(h[0], h[1:], h[1:])
