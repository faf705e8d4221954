import json
import logging

import numpy as np
import pytest

from hodgeflow.data import (
    SIGNAL_KINDS,
    accuracy,
    dataset_from_papers,
    load_coauthorship,
    make_task,
    synth_coauthorship,
    synth_complex,
    synth_papers,
    synth_signal,
)
from hodgeflow.spectral import hodge_components


def write_json(tmp_path, obj):
    path = tmp_path / "papers.json"
    path.write_text(json.dumps(obj))
    return path


class TestLoad:
    def test_example(self, tmp_path):
        papers = [{"authors": [1, 2], "citations": 10}, {"authors": [1, 2, 3], "citations": 5}]
        ds = load_coauthorship(write_json(tmp_path, {"K": 2, "papers": papers}))
        X = ds.complex
        assert X.N == [3, 3, 1]
        edge = dict(zip(X.simplices[1], ds.signals[1]))
        assert edge == {(1, 2): 10.0, (1, 3): 0.0, (2, 3): 0.0}
        assert ds.signals[2].tolist() == [5.0]
        assert ds.signals[0].tolist() == [0.0, 0.0, 0.0]

    def test_duplicate_author_sets_add_up(self):
        ds = dataset_from_papers([{"authors": [4, 2], "citations": 3}, {"authors": [2, 4], "citations": 4}], 1)
        assert ds.signals[1].tolist() == [7.0]

    def test_single_author_papers(self):
        ds = dataset_from_papers([{"authors": [7], "citations": 2}], 1)
        assert ds.complex.N == [1, 0] and ds.signals[0].tolist() == [2.0]

    def test_oversized_papers_are_skipped(self, caplog):
        papers = [{"authors": [1, 2, 3, 4], "citations": 9}, {"authors": [1, 2], "citations": 1}]
        with caplog.at_level(logging.WARNING):
            ds = dataset_from_papers(papers, 1)
        assert ds.complex.N == [2, 1]
        assert "skipping" in caplog.text

    @pytest.mark.parametrize(
        "papers",
        [[], [{"authors": [1, 2, 3], "citations": 1}], [{"authors": [], "citations": 1}], [{"authors": [1]}],
         [{"authors": [1], "citations": -2}]],
    )
    def test_invalid(self, papers):
        with pytest.raises(ValueError):
            dataset_from_papers(papers, 1)

    def test_bad_document(self, tmp_path):
        with pytest.raises(ValueError):
            load_coauthorship(write_json(tmp_path, {"papers": []}))
        with pytest.raises(ValueError):
            load_coauthorship(write_json(tmp_path, {"K": 1, "papers": [], "format": 2}))


class TestMakeTask:
    def test_median_fill_example(self):
        task = make_task(np.array([1.0, 2.0, 100.0]), 0, 0.34, seed=0)
        assert task.missing.sum() == 1
        # whichever entry is hidden gets the median of the other two
        known = np.array([1.0, 2.0, 100.0])[task.mask]
        assert task.input[task.missing][0] == np.median(known)
        if task.missing[2]:
            assert task.input.tolist() == [1.0, 2.0, 1.5]

    def test_invariants(self, rng):
        target = rng.integers(0, 50, 37).astype(float)
        for rate in (0.1, 0.3, 0.5, 0.9):
            task = make_task(target, 1, rate, seed=3)
            assert task.missing.sum() == int(np.floor(rate * 37))
            assert np.array_equal(task.input[task.mask], target[task.mask])
            assert np.all(task.input[task.missing] == np.median(target[task.mask]))
            assert np.array_equal(task.target, target)

    def test_reproducible(self):
        t = np.arange(20.0)
        a, b = make_task(t, 0, 0.3, 5), make_task(t, 0, 0.3, 5)
        assert np.array_equal(a.mask, b.mask)
        assert not np.array_equal(a.mask, make_task(t, 0, 0.3, 6).mask)

    @pytest.mark.parametrize("rate", [0.0, 1.0, -0.1])
    def test_bad_rate(self, rate):
        with pytest.raises(ValueError):
            make_task(np.ones(4), 0, rate, 0)

    def test_from_dataset(self):
        ds = synth_coauthorship(seed=1)
        task = make_task(ds, 2, 0.2, 0)
        assert task.k == 2 and task.target.shape == (ds.complex.N[2],)
        with pytest.raises(ValueError):
            make_task(ds, 9, 0.2, 0)

    def test_csv(self, tmp_path):
        make_task(np.array([1.0, 2.0, 3.0, 4.0]), 0, 0.5, 0).to_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "index,target,mask,input" and len(lines) == 5


class TestAccuracy:
    def test_examples(self):
        target = np.array([100.0, 100.0, 0.0, 0.0, 20.0])
        pred = np.array([104.9, 94.0, 0.05, -0.2, 21.0])
        assert accuracy(pred, target, np.ones(5, bool)) == pytest.approx(3 / 5)
        assert accuracy(pred, target, np.array([1, 0, 0, 0, 0], bool)) == 1.0

    def test_permutation_invariant(self, rng):
        t = rng.integers(0, 30, 50).astype(float)
        p = t + rng.normal(0, 1, 50)
        m = rng.random(50) < 0.5
        perm = rng.permutation(50)
        assert accuracy(p, t, m) == accuracy(p[perm], t[perm], m[perm])

    def test_no_missing(self):
        with pytest.raises(ValueError):
            accuracy(np.ones(2), np.ones(2), np.zeros(2, bool))


class TestSynthetic:
    def test_empty_and_full_graph(self):
        assert synth_complex(4, 0.0, 2, 0).N == [4, 0, 0]
        assert synth_complex(4, 1.0, 2, 0).N == [4, 6, 4]
        assert synth_complex(4, 1.0, 3, 0).N == [4, 6, 4, 1]

    def test_is_canonical_clique_complex(self):
        X = synth_complex(12, 0.5, 3, seed=9)
        assert X.is_canonical()
        edges = set(X.simplices[1])
        for t in X.simplices[2]:
            assert {(t[0], t[1]), (t[0], t[2]), (t[1], t[2])} <= edges

    def test_seeded(self):
        assert synth_complex(10, 0.5, 2, 3) == synth_complex(10, 0.5, 2, 3)

    def test_smooth_signals_stay_in_their_subspace(self):
        X = synth_complex(10, 0.6, 2, seed=2)
        x_G, x_C, x_H = hodge_components(X, 1, synth_signal(X, 1, "smooth-gradient", 0))
        assert np.abs(x_C).max() < 1e-9 and np.abs(x_H).max() < 1e-9 and np.abs(x_G).max() > 0
        x_G, x_C, x_H = hodge_components(X, 1, synth_signal(X, 1, "smooth-curl", 0))
        assert np.abs(x_G).max() < 1e-9 and np.abs(x_H).max() < 1e-9

    def test_citation_like(self):
        X = synth_complex(10, 0.6, 2, seed=2)
        x = synth_signal(X, 1, "citation-like", 4)
        assert np.all(x >= 0) and np.array_equal(x, np.round(x))

    def test_signal_kind_errors(self):
        X = synth_complex(6, 0.8, 2, seed=0)
        assert len(SIGNAL_KINDS) == 3
        with pytest.raises(ValueError):
            synth_signal(X, 0, "smooth-gradient", 0)
        with pytest.raises(ValueError):
            synth_signal(X, 2, "smooth-curl", 0)
        with pytest.raises(ValueError):
            synth_signal(X, 1, "white", 0)

    def test_papers(self):
        papers = synth_papers(30, 80, 3, seed=1)
        assert len(papers) == 80
        assert all(1 <= len(p["authors"]) <= 4 and p["citations"] >= 0 for p in papers)
        assert papers == synth_papers(30, 80, 3, seed=1)

    def test_coauthorship_dataset(self):
        ds = synth_coauthorship(seed=0)
        assert ds.complex.K == 3
        assert all(s.shape == (n,) for s, n in zip(ds.signals, ds.complex.N))
        assert all(n > 0 for n in ds.complex.N)
