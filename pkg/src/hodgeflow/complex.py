"""Simplicial complexes, incidence matrices and Hodge Laplacians.

A complex stores, for every order k, the list of k-simplices (each a sorted
tuple of vertex ids) together with a sign vector giving each simplex's
orientation relative to the ascending vertex order. Complexes produced by
:func:`build_complex` are canonical: lexicographic order, all signs +1.
:func:`permute_complex` and :func:`reorient_complex` produce relabeled or
reoriented copies whose incidence matrices are the conjugated originals.

Incidence and Laplacian matrices are assembled in int64 and only converted to
float64 by :meth:`SimplicialComplex.laplacians`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

Simplex = tuple[int, ...]


class InvalidOrderError(ValueError):
    pass


@dataclass(frozen=True)
class LaplacianSet:
    """Lower, upper and full Hodge Laplacians of one order (float64 CSR)."""

    lower: sp.csr_matrix
    upper: sp.csr_matrix
    full: sp.csr_matrix


class Neighbors(NamedTuple):
    lower: list[int]
    upper: list[int]
    max_degree: int


class SimplicialComplex:
    """Immutable simplicial complex of order ``K``.

    Use :func:`build_complex` rather than calling the constructor directly;
    the constructor trusts its input (closure, no duplicates).
    """

    def __init__(
        self,
        K: int,
        simplices: Sequence[Sequence[Simplex]],
        orientation: Sequence[np.ndarray] | None = None,
    ):
        if len(simplices) != K + 1:
            raise ValueError(f"expected {K + 1} simplex lists, got {len(simplices)}")
        self._K = int(K)
        self._simplices = tuple(tuple(tuple(s) for s in level) for level in simplices)
        if orientation is None:
            orientation = [np.ones(len(level), dtype=np.int64) for level in self._simplices]
        signs = []
        for k, d in enumerate(orientation):
            d = np.asarray(d, dtype=np.int64).copy()
            if d.shape != (len(self._simplices[k]),) or not np.all(np.abs(d) == 1):
                raise ValueError(f"orientation for order {k} must be a ±1 vector of length N[{k}]")
            d.setflags(write=False)
            signs.append(d)
        self._orientation = tuple(signs)
        self._index = tuple({s: i for i, s in enumerate(level)} for level in self._simplices)
        self._cache: dict = {}

    @property
    def K(self) -> int:
        return self._K

    @property
    def simplices(self) -> tuple[tuple[Simplex, ...], ...]:
        return self._simplices

    @property
    def orientation(self) -> tuple[np.ndarray, ...]:
        return self._orientation

    @property
    def N(self) -> list[int]:
        return [len(level) for level in self._simplices]

    def index(self, simplex: Iterable[int]) -> int:
        s = tuple(sorted(simplex))
        return self._index[len(s) - 1][s]

    def is_canonical(self) -> bool:
        return all(
            list(level) == sorted(level) and np.all(d == 1)
            for level, d in zip(self._simplices, self._orientation)
        )

    def _check_order(self, k: int, lo: int) -> None:
        if not lo <= k <= self._K:
            raise InvalidOrderError(f"order {k} outside [{lo}, {self._K}]")

    def incidence(self, k: int) -> sp.csr_matrix:
        """Signed incidence matrix B_k, shape (N[k-1], N[k]), int64.

        Entry (i, j) is (-1)^p times both orientation signs when simplex i of
        order k-1 is simplex j with its p-th vertex removed.
        """
        self._check_order(k, 1)
        key = ("B", k)
        if key not in self._cache:
            faces = self._index[k - 1]
            rows, cols, vals = [], [], []
            d_lo, d_hi = self._orientation[k - 1], self._orientation[k]
            for j, s in enumerate(self._simplices[k]):
                for p in range(k + 1):
                    i = faces[s[:p] + s[p + 1 :]]
                    rows.append(i)
                    cols.append(j)
                    vals.append((-1) ** p * d_lo[i] * d_hi[j])
            shape = (len(self._simplices[k - 1]), len(self._simplices[k]))
            B = sp.csr_matrix(
                (np.array(vals, dtype=np.int64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
                shape=shape,
            )
            B.sort_indices()
            self._cache[key] = B
        return self._cache[key]

    def integer_laplacians(self, k: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """Exact (lower, upper) Laplacians of order k in int64."""
        self._check_order(k, 0)
        key = ("Lint", k)
        if key not in self._cache:
            n = len(self._simplices[k])
            if k == 0:
                lower = sp.csr_matrix((n, n), dtype=np.int64)
            else:
                B = self.incidence(k)
                lower = (B.T @ B).tocsr()
            if k == self._K:
                upper = sp.csr_matrix((n, n), dtype=np.int64)
            else:
                B = self.incidence(k + 1)
                upper = (B @ B.T).tocsr()
            for M in (lower, upper):
                M.eliminate_zeros()
                M.sort_indices()
            self._cache[key] = (lower, upper)
        return self._cache[key]

    def laplacians(self, k: int) -> LaplacianSet:
        key = ("L", k)
        if key not in self._cache:
            lower, upper = self.integer_laplacians(k)
            full = (lower + upper).tocsr()
            full.eliminate_zeros()
            self._cache[key] = LaplacianSet(
                lower.astype(np.float64), upper.astype(np.float64), full.astype(np.float64)
            )
        return self._cache[key]

    def neighbors(self, k: int, i: int) -> Neighbors:
        """Lower/upper neighbours of simplex ``i`` of order ``k``.

        ``max_degree`` is the largest total neighbour count over all
        k-simplices (the ``D`` in the per-shift cost bound).
        """
        self._check_order(k, 0)
        if not 0 <= i < len(self._simplices[k]):
            raise IndexError(f"simplex index {i} out of range for order {k}")
        lower, upper = self.integer_laplacians(k)

        def row(M: sp.csr_matrix, r: int) -> list[int]:
            cols = M.indices[M.indptr[r] : M.indptr[r + 1]]
            return [int(c) for c in cols if c != r]

        degrees = [len(set(row(lower, r)) | set(row(upper, r))) for r in range(len(self._simplices[k]))]
        return Neighbors(row(lower, i), row(upper, i), max(degrees, default=0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return (
            self._K == other._K
            and self._simplices == other._simplices
            and all(np.array_equal(a, b) for a, b in zip(self._orientation, other._orientation))
        )

    def __hash__(self) -> int:
        return hash((self._K, self._simplices))

    def __repr__(self) -> str:
        return f"SimplicialComplex(K={self._K}, N={self.N})"


def build_complex(simplex_list: Iterable[Iterable[int]], K: int) -> SimplicialComplex:
    """Downward closure of ``simplex_list`` in canonical form.

    >>> build_complex([{1, 2, 3}], K=2).N
    [3, 3, 1]
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    levels: list[set[Simplex]] = [set() for _ in range(K + 1)]
    for raw in simplex_list:
        s = tuple(sorted(set(int(v) for v in raw)))
        if not s:
            continue
        if any(v < 0 for v in s):
            raise ValueError(f"vertex ids must be nonnegative: {list(raw)}")
        if len(s) > K + 1:
            raise ValueError(f"simplex {list(s)} has {len(s)} vertices, more than K+1={K + 1}")
        for size in range(1, len(s) + 1):
            levels[size - 1].update(combinations(s, size))
    return SimplicialComplex(K, [sorted(level) for level in levels])


def permute_complex(X: SimplicialComplex, perms: Sequence[Sequence[int]]) -> SimplicialComplex:
    """Relabel simplices: new simplex ``i`` of order k is old ``perms[k][i]``.

    With P_k[i, perms[k][i]] = 1 the result satisfies
    B'_k = P_{k-1} B_k P_k^T, and a k-signal maps as x' = x[perms[k]].
    """
    if len(perms) != X.K + 1:
        raise ValueError(f"need {X.K + 1} permutations, got {len(perms)}")
    levels, signs = [], []
    for k, p in enumerate(perms):
        p = np.asarray(p, dtype=np.int64)
        n = X.N[k]
        if p.shape != (n,) or not np.array_equal(np.sort(p), np.arange(n)):
            raise ValueError(f"permutation for order {k} is not a bijection on {n} elements")
        levels.append([X.simplices[k][j] for j in p])
        signs.append(X.orientation[k][p])
    return SimplicialComplex(X.K, levels, signs)


def reorient_complex(X: SimplicialComplex, signs: Sequence[Sequence[int]]) -> SimplicialComplex:
    """Flip reference orientations: B'_k = D_{k-1} B_k D_k with D_k = diag(signs[k])."""
    if len(signs) != X.K + 1:
        raise ValueError(f"need {X.K + 1} sign vectors, got {len(signs)}")
    d = [np.asarray(s, dtype=np.int64) for s in signs]
    if X.N[0] and not np.all(d[0] == 1):
        raise ValueError("node signals carry no orientation: d_0 must be all ones")
    for k, dk in enumerate(d):
        if dk.shape != (X.N[k],):
            raise ValueError(f"sign vector for order {k} must have length {X.N[k]}")
    return SimplicialComplex(X.K, X.simplices, [o * dk for o, dk in zip(X.orientation, d)])


def random_permutations(X: SimplicialComplex, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.permutation(n) for n in X.N]


def random_orientations(X: SimplicialComplex, rng: np.random.Generator) -> list[np.ndarray]:
    signs = [rng.choice(np.array([-1, 1]), size=n) for n in X.N]
    signs[0] = np.ones(X.N[0], dtype=np.int64)
    return signs


def maximal_simplices(X: SimplicialComplex) -> list[Simplex]:
    """Simplices that are not a face of any higher-order simplex."""
    covered: set[Simplex] = set()
    for k in range(1, X.K + 1):
        for s in X.simplices[k]:
            covered.update(combinations(s, k))
    return [s for level in X.simplices for s in level if s not in covered]


def complex_to_json(X: SimplicialComplex) -> dict:
    return {"format": 1, "K": X.K, "simplices": [list(s) for s in maximal_simplices(X)]}


def complex_from_json(obj: dict) -> SimplicialComplex:
    if obj.get("format", 1) != 1:
        raise ValueError(f"unsupported complex format {obj.get('format')!r}")
    try:
        K, simplices = int(obj["K"]), obj["simplices"]
    except (KeyError, TypeError) as exc:
        raise ValueError("complex JSON needs integer 'K' and list 'simplices'") from exc
    return build_complex(simplices, K)


def load_complex(path) -> SimplicialComplex:
    with open(path) as fh:
        return complex_from_json(json.load(fh))


def save_complex_binary(X: SimplicialComplex, path) -> None:
    """Write the full (ordered, oriented) complex as a numpy ``.npz`` archive."""
    arrays = {"format": np.array(1), "K": np.array(X.K)}
    for k in range(X.K + 1):
        arrays[f"simplices_{k}"] = np.array(X.simplices[k], dtype=np.int64).reshape(X.N[k], k + 1)
        arrays[f"orientation_{k}"] = X.orientation[k]
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_complex_binary(path) -> SimplicialComplex:
    with np.load(path) as data:
        if int(data["format"]) != 1:
            raise ValueError("unsupported binary complex format")
        K = int(data["K"])
        levels = [[tuple(int(v) for v in row) for row in data[f"simplices_{k}"]] for k in range(K + 1)]
        signs = [data[f"orientation_{k}"] for k in range(K + 1)]
    return SimplicialComplex(K, levels, signs)
