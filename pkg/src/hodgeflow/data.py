"""Coauthorship complexes, citation signals, imputation tasks and synthetic fixtures.

Coauthorship JSON (``format`` optional, defaults to 1)::

    {"format": 1, "K": 3,
     "papers": [{"authors": [0, 4, 7], "citations": 12}, ...]}

A paper with m authors is an (m-1)-simplex. Its citations are added to that
simplex's signal; faces that exist only through closure get 0. Papers with
more than K+1 authors are skipped with a warning.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .complex import SimplicialComplex, build_complex

log = logging.getLogger(__name__)

ACCURACY_BAND = 0.05


@dataclass(frozen=True)
class CoauthorshipDataset:
    complex: SimplicialComplex
    signals: list[np.ndarray]

    def __post_init__(self):
        for k, s in enumerate(self.signals):
            if s.shape != (self.complex.N[k],):
                raise ValueError(f"signal of order {k} has length {s.shape[0]}, expected {self.complex.N[k]}")
            if np.any(s < 0):
                raise ValueError(f"signal of order {k} has negative entries")


@dataclass(frozen=True)
class ImputationTask:
    k: int
    target: np.ndarray
    mask: np.ndarray  # True where the value is known
    input: np.ndarray
    rate: float

    @property
    def missing(self) -> np.ndarray:
        return ~self.mask

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "target", "mask", "input"])
            for i, (t, m, x) in enumerate(zip(self.target, self.mask, self.input)):
                w.writerow([i, repr(float(t)), int(m), repr(float(x))])


def dataset_from_papers(papers: list[dict], K: int) -> CoauthorshipDataset:
    cells: dict[tuple[int, ...], float] = {}
    for n, paper in enumerate(papers):
        try:
            authors = tuple(sorted(set(int(a) for a in paper["authors"])))
            citations = float(paper["citations"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed paper record #{n}: {paper!r}") from exc
        if not authors:
            raise ValueError(f"paper record #{n} has no authors")
        if citations < 0 or not np.isfinite(citations):
            raise ValueError(f"paper record #{n} has invalid citation count {citations}")
        if len(authors) > K + 1:
            log.warning("skipping paper #%d with %d authors (> K+1 = %d)", n, len(authors), K + 1)
            continue
        cells[authors] = cells.get(authors, 0.0) + citations
    if not cells:
        raise ValueError("no usable papers: the complex would be empty")
    X = build_complex(cells.keys(), K)
    signals = []
    for k in range(K + 1):
        signals.append(np.array([cells.get(s, 0.0) for s in X.simplices[k]], dtype=np.float64))
    return CoauthorshipDataset(X, signals)


def load_coauthorship(path) -> CoauthorshipDataset:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "papers" not in obj or "K" not in obj:
        raise ValueError(f"{path}: expected an object with 'K' and 'papers'")
    if obj.get("format", 1) != 1:
        raise ValueError(f"{path}: unsupported format {obj['format']!r}")
    return dataset_from_papers(obj["papers"], int(obj["K"]))


def make_task(dataset: CoauthorshipDataset | np.ndarray, k: int, rate: float, seed: int) -> ImputationTask:
    """Hide floor(rate * N[k]) entries uniformly at random and median-fill them.

    ``dataset`` may also be a bare signal vector (then ``k`` is just recorded).
    """
    if not 0 < rate < 1:
        raise ValueError(f"missing rate must lie in (0, 1), got {rate}")
    if isinstance(dataset, CoauthorshipDataset):
        if not 0 <= k <= dataset.complex.K:
            raise ValueError(f"order {k} outside [0, {dataset.complex.K}]")
        target = dataset.signals[k]
    else:
        target = np.asarray(dataset, dtype=np.float64)
    n = target.shape[0]
    if n == 0:
        raise ValueError(f"order {k} has no simplices")
    n_missing = int(np.floor(rate * n))
    rng = np.random.default_rng(seed)
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(n, size=n_missing, replace=False)] = False
    inp = target.copy()
    inp[~mask] = np.median(target[mask])
    return ImputationTask(k, target.copy(), mask, inp, float(rate))


def accuracy(pred: np.ndarray, target: np.ndarray, missing: np.ndarray) -> float:
    """Fraction of missing entries predicted within +/-5% of the true value.

    A zero target counts as correct when |pred| <= 0.05.
    """
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    missing = np.asarray(missing, dtype=bool)
    if not missing.any():
        raise ValueError("no missing entries to score")
    p, t = pred[missing], target[missing]
    band = np.where(t == 0, ACCURACY_BAND, ACCURACY_BAND * np.abs(t))
    return float(np.mean(np.abs(p - t) <= band))


def synth_complex(n_vertices: int, edge_prob: float, K: int, seed: int) -> SimplicialComplex:
    """Clique complex, truncated at order K, of a seeded Erdos-Renyi graph."""
    rng = np.random.default_rng(seed)
    pairs = list(combinations(range(n_vertices), 2))
    draws = rng.random(len(pairs))
    adj = [set() for _ in range(n_vertices)]
    for (u, v), r in zip(pairs, draws):
        if r < edge_prob:
            adj[u].add(v)
            adj[v].add(u)
    levels = [[(v,) for v in range(n_vertices)]]
    for _ in range(K):
        nxt = []
        for s in levels[-1]:
            common = set.intersection(*(adj[v] for v in s))
            nxt.extend(s + (w,) for w in sorted(common) if w > s[-1])
        levels.append(nxt)
    return SimplicialComplex(K, [sorted(level) for level in levels])


SIGNAL_KINDS = ("smooth-gradient", "smooth-curl", "citation-like")


def synth_signal(X: SimplicialComplex, k: int, kind: str, seed: int) -> np.ndarray:
    """Synthetic k-signal.

    ``smooth-gradient`` is B_k^T v for a random (k-1)-signal v, low-passed by
    (I + L_lower)^-1; ``smooth-curl`` is the upper analogue. Both stay inside
    their Hodge subspace. ``citation-like`` is rounded log-normal counts.
    """
    rng = np.random.default_rng(seed)
    n = X.N[k]
    if kind == "citation-like":
        return np.round(rng.lognormal(mean=2.0, sigma=1.2, size=n))
    lap = X.laplacians(k)
    if kind == "smooth-gradient":
        if k == 0:
            raise ValueError("order 0 has no gradient space")
        x = X.incidence(k).T.astype(np.float64) @ rng.standard_normal(X.N[k - 1])
        L = lap.lower
    elif kind == "smooth-curl":
        if k == X.K:
            raise ValueError(f"order {k} = K has no curl space")
        x = X.incidence(k + 1).astype(np.float64) @ rng.standard_normal(X.N[k + 1])
        L = lap.upper
    else:
        raise ValueError(f"unknown signal kind {kind!r}; choose from {SIGNAL_KINDS}")
    if n == 0:
        return np.zeros(0)
    return np.asarray(spsolve((sp.identity(n, format="csc") + L).tocsc(), x)).reshape(n)


def synth_papers(n_authors: int = 40, n_papers: int = 120, K: int = 3, seed: int = 0) -> list[dict]:
    """Random paper records with community structure and author-driven citations.

    Authors belong to a few groups and tend to write with their group; each
    author has a latent visibility and a paper's expected citations grow with
    its authors' mean visibility. Counts are rounded log-normal, so the
    signal is heavy-tailed, integer and nonnegative.
    """
    rng = np.random.default_rng(seed)
    n_groups = max(1, n_authors // 8)
    group = rng.integers(n_groups, size=n_authors)
    visibility = rng.normal(0.0, 0.8, size=n_authors)
    members = [np.flatnonzero(group == g) for g in range(n_groups)]
    sizes = np.arange(1, K + 2)
    papers = []
    for _ in range(n_papers):
        m = int(rng.choice(sizes))
        lead = int(rng.integers(n_authors))
        pool = members[group[lead]]
        if len(pool) < m or rng.random() < 0.2:
            pool = np.arange(n_authors)
        others = rng.choice(pool[pool != lead], size=m - 1, replace=False)
        authors = sorted({lead, *map(int, others)})
        mu = 2.0 + visibility[authors].mean()
        papers.append({"authors": authors, "citations": int(np.round(rng.lognormal(mu, 0.5)))})
    return papers


def synth_coauthorship(n_authors: int = 40, n_papers: int = 120, K: int = 3, seed: int = 0) -> CoauthorshipDataset:
    return dataset_from_papers(synth_papers(n_authors, n_papers, K, seed), K)
