"""Masked l1 loss, reverse-mode gradients through an SCNN, Adam, training."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import filters
from .scnn import ScnnModel, Tape, model_forward

log = logging.getLogger(__name__)

# A GradientSet is a list of arrays congruent with ``model.parameters()``:
# per layer epsilon (f_out, f_in), alpha (L1, f_out, f_in) and, for untied
# layers, beta (L2, f_out, f_in).
GradientSet = list


class TrainingDivergedError(RuntimeError):
    pass


def masked_l1(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> float:
    """Sum of |pred - target| over entries where ``mask`` is set (unnormalized)."""
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if not (pred.shape == target.shape == mask.shape):
        raise ValueError(f"shape mismatch: {pred.shape}, {target.shape}, {mask.shape}")
    if not mask.any():
        raise ValueError("mask selects no entries")
    return float(np.sum(np.abs(pred[mask] - target[mask])))


def backward(model: ScnnModel, tape: Tape, target: np.ndarray, mask: np.ndarray) -> GradientSet:
    """Exact gradients of ``masked_l1(output, target, mask)`` w.r.t. all coefficients.

    The subgradient of |r| at r = 0 is taken as 0.
    """
    if len(tape.records) != len(model.layers):
        raise ValueError("tape does not match model depth")
    X, k = tape.complex, tape.k
    mask = np.asarray(mask, dtype=bool)
    out = tape.records[-1].output[:, 0]
    if out.shape != mask.shape:
        raise ValueError("target/mask length does not match tape")
    dY = (np.sign(out - np.asarray(target, dtype=np.float64)) * mask)[:, None]

    grads_rev: list[list[np.ndarray]] = []
    for layer, rec in zip(reversed(model.layers), reversed(tape.records)):
        if rec.inputs.shape[1] != layer.f_in or rec.preactivation.shape[1] != layer.f_out:
            raise ValueError("tape does not match model layer shapes")
        dZ = dY * layer.nonlinearity.derivative(rec.preactivation)
        d_eps = dZ.T @ rec.inputs
        d_alpha = np.array([dZ.T @ S for S in rec.lower_powers]).reshape(layer.alpha.shape)
        d_beta = np.array([dZ.T @ S for S in rec.upper_powers]).reshape(layer.beta.shape)
        if layer.tied:
            grads_rev.append([d_eps, d_alpha + d_beta])
        else:
            grads_rev.append([d_eps, d_alpha, d_beta])

        # input adjoint H^T dZ; H is symmetric, so Horner over the shifts
        dH = dZ @ layer.epsilon
        for coeffs, shift in ((layer.alpha, filters.shift_lower), (layer.beta, filters.shift_upper)):
            acc = np.zeros_like(dH)
            for c in coeffs[::-1]:
                acc = shift(X, k, acc + dZ @ c)
                if layer.shift_scale != 1.0:
                    acc = acc / layer.shift_scale
            dH = dH + acc
        dY = dH
    return [g for layer_grads in reversed(grads_rev) for g in layer_grads]


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        return adam_step(self, params, grads)


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """One bias-corrected Adam update; advances ``state`` and returns new arrays."""
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ValueError("parameters and gradients are not congruent")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    new = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        new.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return new


def train(model: ScnnModel, task, iters: int = 1000, lr: float = 1e-3) -> tuple[ScnnModel, np.ndarray]:
    """Full-batch Adam on the masked l1 loss over the task's known entries.

    ``task`` needs ``input``, ``target`` and ``mask`` arrays. Returns a trained
    copy of ``model`` and the loss recorded before each update.
    """
    model = model.copy()
    mask = np.asarray(task.mask, dtype=bool)
    if task.input.shape[0] != model.complex.N[model.k]:
        raise ValueError("task length does not match the model's complex order")
    state = AdamState(lr=lr)
    trace = np.empty(iters)
    params = model.parameters()
    for it in range(iters):
        pred, tape = model_forward(model, task.input)
        loss = masked_l1(pred, task.target, mask)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss {loss} at iteration {it}")
        trace[it] = loss
        grads = backward(model, tape, task.target, mask)
        params = adam_step(state, params, grads)
        model.set_parameters(params)
    if iters:
        log.debug("trained %d iterations: loss %.4g -> %.4g", iters, trace[0], trace[-1])
    return model, trace


def moving_average(trace: np.ndarray, window: int = 50) -> np.ndarray:
    trace = np.asarray(trace, dtype=np.float64)
    if trace.size < window:
        return trace.copy()
    c = np.cumsum(np.concatenate([[0.0], trace]))
    return (c[window:] - c[:-window]) / window


@dataclass
class GradcheckReport:
    max_rel_error: float
    n_checked: int
    n_skipped: int


GRAD_RTOL = 1e-5
GRAD_ATOL = 1e-7


def relative_error(analytic: float, numeric: float) -> float:
    """Error normalized so that <= GRAD_RTOL means within max(rtol relative, atol absolute)."""
    scale = max(abs(analytic), abs(numeric), GRAD_ATOL / GRAD_RTOL)
    return abs(analytic - numeric) / scale


def _kink_signature(model: ScnnModel, x0, target, mask) -> tuple[np.ndarray, float]:
    pred, tape = model_forward(model, x0)
    parts = [np.sign(pred - target)[mask]]
    for layer, rec in zip(model.layers, tape.records):
        if layer.nonlinearity.kind == "leaky_relu":
            parts.append(np.sign(rec.preactivation).ravel())
    return np.concatenate(parts), masked_l1(pred, target, mask)


def gradcheck(model: ScnnModel, x0, target, mask, step: float = 1e-6) -> GradcheckReport:
    """Compare analytic gradients with central differences on every coefficient.

    A coordinate is skipped when the +/- step evaluations change the sign of
    any LeakyReLU pre-activation or any masked residual, i.e. when the
    difference quotient straddles a kink of the piecewise-linear loss.
    """
    model = model.copy()
    x0 = np.asarray(x0, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    pred, tape = model_forward(model, x0)
    grads = backward(model, tape, target, mask)
    base_sig, _ = _kink_signature(model, x0, target, mask)

    params = [p.copy() for p in model.parameters()]
    worst, checked, skipped = 0.0, 0, 0
    for pi, p in enumerate(params):
        for idx in np.ndindex(p.shape):
            vals = []
            for delta in (step, -step):
                trial = [q.copy() for q in params]
                trial[pi][idx] += delta
                model.set_parameters(trial)
                vals.append(_kink_signature(model, x0, target, mask))
            if any(not np.array_equal(sig, base_sig) for sig, _ in vals):
                skipped += 1
                continue
            numeric = (vals[0][1] - vals[1][1]) / (2 * step)
            worst = max(worst, relative_error(grads[pi][idx], numeric))
            checked += 1
    model.set_parameters(params)
    return GradcheckReport(worst, checked, skipped)


def random_gradcheck_case(seed: int):
    """Seeded (model, input, target, mask) with P <= 3, F <= 4 and N[k] <= 50."""
    from .data import synth_complex
    from .scnn import Nonlinearity, init_model

    rng = np.random.default_rng(seed)
    while True:
        X = synth_complex(int(rng.integers(6, 11)), float(rng.uniform(0.4, 0.7)), 2, int(rng.integers(2**31)))
        orders = [k for k in range(X.K + 1) if 2 <= X.N[k] <= 50]
        if orders:
            break
    k = int(rng.choice(orders))
    kind = ["leaky_relu", "tanh", "identity"][int(rng.integers(3))]
    tied = bool(rng.random() < 0.25)
    L1 = int(rng.integers(0, 3))
    L2 = L1 if tied else int(rng.integers(0, 3))
    model = init_model(
        X, k, int(rng.integers(2, 4)), int(rng.integers(2, 5)), L1, L2, Nonlinearity(kind), int(rng.integers(2**31)), tied
    )
    n = X.N[k]
    x0 = rng.standard_normal(n)
    target = rng.standard_normal(n)
    mask = rng.random(n) < 0.7
    mask[0] = True
    return model, x0, target, mask


def gradcheck_suite(seed: int = 0, n_configs: int = 10) -> list[GradcheckReport]:
    rng = np.random.default_rng(seed)
    return [gradcheck(*random_gradcheck_case(int(s))) for s in rng.integers(2**31, size=n_configs)]
