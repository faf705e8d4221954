from types import SimpleNamespace

import numpy as np
import pytest

from hodgeflow.data import synth_complex
from hodgeflow.filters import SimplicialFilter
from hodgeflow.learn import (
    AdamState,
    TrainingDivergedError,
    adam_step,
    backward,
    gradcheck,
    gradcheck_suite,
    masked_l1,
    moving_average,
    random_gradcheck_case,
    train,
)
from hodgeflow.scnn import Nonlinearity, ScnnLayer, ScnnModel, init_model, model_forward


class TestMaskedL1:
    def test_examples(self):
        assert masked_l1([1, 2, 3], [1, 0, 0], [True, True, False]) == 2.0
        assert masked_l1([-1.5], [1.0], [True]) == 2.5

    def test_against_loop(self, rng):
        p, t = rng.standard_normal(40), rng.standard_normal(40)
        m = rng.random(40) < 0.5
        assert masked_l1(p, t, m) == pytest.approx(sum(abs(a - b) for a, b, k in zip(p, t, m) if k), rel=1e-12)

    def test_empty_mask(self):
        with pytest.raises(ValueError):
            masked_l1([1.0], [1.0], [False])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            masked_l1([1.0, 2.0], [1.0], [True])


def eps_only_model(X, eps):
    layer = ScnnLayer.from_filters([[SimplicialFilter(eps)]], Nonlinearity("identity"))
    return ScnnModel(X, 1, [layer])


class TestBackward:
    def test_zero_mask_gives_zero_gradients(self, triangle, rng):
        m = init_model(triangle, 1, 2, 3, 1, 1, "tanh", seed=0)
        y, tape = model_forward(m, rng.standard_normal(3))
        assert all(np.all(g == 0) for g in backward(m, tape, np.zeros(3), np.zeros(3, bool)))

    def test_epsilon_only_closed_form(self, triangle):
        x = np.array([1.0, -2.0, 0.5])
        target = np.zeros(3)
        m = eps_only_model(triangle, 0.7)
        _, tape = model_forward(m, x)
        g = backward(m, tape, target, np.ones(3, bool))
        assert g[0][0, 0] == pytest.approx(np.sum(np.sign(0.7 * x) * x))
        assert g[1].size == 0 and g[2].size == 0

    def test_gradient_shapes(self, triangle, rng):
        m = init_model(triangle, 1, 3, 4, 2, 1, seed=1)
        _, tape = model_forward(m, rng.standard_normal(3))
        g = backward(m, tape, np.zeros(3), np.ones(3, bool))
        assert [a.shape for a in g] == [p.shape for p in m.parameters()]

    @pytest.mark.parametrize("kind", ["tanh", "identity", "leaky_relu"])
    @pytest.mark.parametrize("tied", [False, True])
    def test_finite_differences(self, kind, tied, rng):
        X = synth_complex(9, 0.6, 2, seed=4)
        m = init_model(X, 1, 3, 3, 2, 2, kind, seed=3, tied=tied)
        n = X.N[1]
        report = gradcheck(m, rng.standard_normal(n), rng.standard_normal(n), rng.random(n) < 0.6)
        assert report.n_checked > 0.9 * m.n_parameters
        assert report.max_rel_error <= 1e-5

    def test_finite_differences_normalized_shifts(self, rng):
        X = synth_complex(9, 0.6, 2, seed=5)
        m = init_model(X, 1, 2, 3, 2, 2, "tanh", seed=2, normalize=True)
        n = X.N[1]
        report = gradcheck(m, rng.standard_normal(n), rng.standard_normal(n), np.ones(n, bool))
        assert report.max_rel_error <= 1e-5


class TestAdam:
    def test_zero_gradient_is_noop(self):
        p = [np.array([1.0, -2.0])]
        out = adam_step(AdamState(), p, [np.zeros(2)])
        assert np.array_equal(out[0], p[0])

    def test_first_step_is_signed_lr(self):
        g = np.array([3.0, -0.01, 1e3])
        out = adam_step(AdamState(lr=1e-3), [np.zeros(3)], [g])
        assert np.allclose(out[0], -1e-3 * np.sign(g), rtol=1e-6)

    def test_constant_gradient_moves_lr_per_step(self):
        state, p = AdamState(lr=0.01), [np.zeros(1)]
        for _ in range(25):
            p = adam_step(state, p, [np.array([2.0])])
        assert state.step == 25
        assert p[0][0] == pytest.approx(-0.25, rel=1e-6)

    def test_incongruent(self):
        with pytest.raises(ValueError):
            adam_step(AdamState(), [np.zeros(2)], [np.zeros(3)])


def toy_task(X, rng):
    n = X.N[1]
    target = rng.standard_normal(n)
    mask = rng.random(n) < 0.8
    return SimpleNamespace(input=np.where(mask, target, 0.0), target=target, mask=mask)


class TestTrain:
    def test_zero_iterations(self, triangle, rng):
        m = init_model(triangle, 1, 2, 2, 1, 1, seed=0)
        trained, trace = train(m, toy_task(triangle, rng), iters=0)
        assert trace.size == 0
        assert all(np.array_equal(a, b) for a, b in zip(trained.parameters(), m.parameters()))

    def test_does_not_mutate_input_model(self, triangle, rng):
        m = init_model(triangle, 1, 2, 2, 1, 1, seed=0)
        before = [p.copy() for p in m.parameters()]
        train(m, toy_task(triangle, rng), iters=5)
        assert all(np.array_equal(a, b) for a, b in zip(before, m.parameters()))

    def test_loss_decreases(self, rng):
        X = synth_complex(10, 0.6, 2, seed=1)
        m = init_model(X, 1, 2, 4, 1, 1, seed=2, normalize=True)
        _, trace = train(m, toy_task(X, rng), iters=200, lr=1e-2)
        assert trace[-1] < 0.5 * trace[0]

    def test_deterministic(self, rng):
        X = synth_complex(10, 0.6, 2, seed=1)
        task = toy_task(X, rng)
        m = init_model(X, 1, 2, 3, 1, 1, seed=2)
        (a, ta), (b, tb) = train(m, task, 30), train(m, task, 30)
        assert np.array_equal(ta, tb)
        assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))

    def test_divergence_raises(self, triangle, rng):
        task = toy_task(triangle, rng)
        task.input = np.full(3, np.inf)
        with pytest.raises(TrainingDivergedError):
            train(init_model(triangle, 1, 1, 1, 0, 0, "identity"), task, 3)

    def test_wrong_order(self, triangle, rng):
        with pytest.raises(ValueError):
            train(init_model(triangle, 2, 1, 1, 0, 0), toy_task(triangle, rng), 1)


def test_moving_average():
    assert np.allclose(moving_average(np.arange(6.0), 3), [1, 2, 3, 4])
    assert np.array_equal(moving_average(np.ones(2), 50), np.ones(2))


def test_gradcheck_case_bounds():
    for seed in range(6):
        m, x0, target, mask = random_gradcheck_case(seed)
        assert len(m.layers) <= 3 and x0.shape[0] <= 50 and mask.any()
        assert max(l.f_out for l in m.layers) <= 4


def test_gradcheck_suite():
    reports = gradcheck_suite(seed=11, n_configs=4)
    assert len(reports) == 4
    assert max(r.max_rel_error for r in reports) <= 1e-5
