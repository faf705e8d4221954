"""Simplicial convolutional neural networks.

Each layer maps an N x f_in feature matrix to N x f_out through an
f_out x f_in bank of simplicial filters followed by an elementwise
nonlinearity. Widths run 1 -> F -> ... -> F -> 1. There are no biases.

Coefficients of a layer are stored as arrays rather than a grid of filter
objects: ``epsilon[f, g]``, ``alpha[l, f, g]`` and ``beta[l, f, g]`` belong
to the filter taking input feature g to output feature f. A *tied* layer
shares ``alpha`` and ``beta`` (the SNN special case, a polynomial in the
full Hodge Laplacian).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import filters
from .complex import SimplicialComplex
from .filters import SimplicialFilter
from .linalg import sym_eig


@dataclass(frozen=True)
class Nonlinearity:
    kind: str = "leaky_relu"
    slope: float = 0.01

    KINDS = ("leaky_relu", "tanh", "identity")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown nonlinearity {self.kind!r}; choose from {self.KINDS}")

    @classmethod
    def parse(cls, spec: str) -> "Nonlinearity":
        """Parse ``"tanh"``, ``"identity"``, ``"leaky_relu"`` or ``"leaky_relu:0.2"``."""
        name, _, arg = spec.strip().lower().replace("-", "_").partition(":")
        if name in ("leakyrelu", "lrelu"):
            name = "leaky_relu"
        if name == "leaky_relu" and arg:
            return cls(name, float(arg))
        return cls(name)

    def __str__(self) -> str:
        return f"leaky_relu:{self.slope:g}" if self.kind == "leaky_relu" else self.kind

    @property
    def is_odd(self) -> bool:
        return self.kind in ("tanh", "identity") or (self.kind == "leaky_relu" and self.slope == 1.0)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return apply_nonlinearity(self, z)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "leaky_relu":
            # subgradient at 0 is the negative-side slope
            return np.where(z > 0, 1.0, self.slope)
        if self.kind == "tanh":
            return 1.0 - np.tanh(z) ** 2
        return np.ones_like(z)


def apply_nonlinearity(kind: Nonlinearity, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if kind.kind == "leaky_relu":
        return np.where(z >= 0, z, kind.slope * z)
    if kind.kind == "tanh":
        return np.tanh(z)
    return z.copy()


@dataclass
class ScnnLayer:
    epsilon: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)
    tied: bool = False
    shift_scale: float = 1.0

    def __post_init__(self):
        if not self.shift_scale > 0:
            raise ValueError("shift_scale must be positive")
        self.shift_scale = float(self.shift_scale)
        self.epsilon = np.asarray(self.epsilon, dtype=np.float64)
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.tied:
            if self.beta is not None and not np.array_equal(np.asarray(self.beta), self.alpha):
                raise ValueError("tied layer needs beta equal to alpha")
            self.beta = self.alpha
        else:
            self.beta = np.asarray(self.beta, dtype=np.float64)
        f_out, f_in = self.epsilon.shape
        for name, arr in (("alpha", self.alpha), ("beta", self.beta)):
            if arr.ndim != 3 or arr.shape[1:] != (f_out, f_in):
                raise ValueError(f"{name} must have shape (order, {f_out}, {f_in}), got {arr.shape}")

    @property
    def f_in(self) -> int:
        return self.epsilon.shape[1]

    @property
    def f_out(self) -> int:
        return self.epsilon.shape[0]

    @property
    def orders(self) -> tuple[int, int]:
        return self.alpha.shape[0], self.beta.shape[0]

    @property
    def filter_length(self) -> int:
        """Independent coefficients per filter."""
        L1, L2 = self.orders
        return 1 + L1 if self.tied else 1 + L1 + L2

    def parameters(self) -> list[np.ndarray]:
        return [self.epsilon, self.alpha] if self.tied else [self.epsilon, self.alpha, self.beta]

    def set_parameters(self, params: list[np.ndarray]) -> None:
        if self.tied:
            self.epsilon, self.alpha = (np.array(p, dtype=np.float64) for p in params)
            self.beta = self.alpha
        else:
            self.epsilon, self.alpha, self.beta = (np.array(p, dtype=np.float64) for p in params)

    @property
    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def filter(self, f: int, g: int) -> SimplicialFilter:
        """Filter (f, g) expressed on the unscaled Laplacians."""
        L1, L2 = self.orders
        c = self.shift_scale
        return SimplicialFilter(
            self.epsilon[f, g],
            self.alpha[:, f, g] / c ** np.arange(1, L1 + 1),
            self.beta[:, f, g] / c ** np.arange(1, L2 + 1),
        )

    @classmethod
    def from_filters(
        cls, grid: list[list[SimplicialFilter]], nonlinearity: Nonlinearity | None = None
    ) -> "ScnnLayer":
        """Layer from an f_out x f_in grid of filters sharing their orders."""
        orders = {h.orders for row in grid for h in row}
        if len(orders) != 1:
            raise ValueError(f"filters in a layer must share (L1, L2); got {sorted(orders)}")
        eps = np.array([[h.epsilon for h in row] for row in grid])
        alpha = np.array([[h.alpha for h in row] for row in grid]).reshape(eps.shape + (-1,))
        beta = np.array([[h.beta for h in row] for row in grid]).reshape(eps.shape + (-1,))
        return cls(eps, np.moveaxis(alpha, 2, 0), np.moveaxis(beta, 2, 0), nonlinearity or Nonlinearity())

    def copy(self) -> "ScnnLayer":
        return ScnnLayer(
            self.epsilon.copy(),
            self.alpha.copy(),
            None if self.tied else self.beta.copy(),
            self.nonlinearity,
            self.tied,
            self.shift_scale,
        )

    def to_json(self) -> dict:
        L1, L2 = self.orders
        return {
            "f_in": self.f_in,
            "f_out": self.f_out,
            "L1": L1,
            "L2": L2,
            "tied": self.tied,
            "shift_scale": self.shift_scale,
            "nonlinearity": str(self.nonlinearity),
            "epsilon": self.epsilon.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScnnLayer":
        f_in, f_out, L1, L2 = obj["f_in"], obj["f_out"], obj["L1"], obj["L2"]
        tied = bool(obj.get("tied", False))
        eps = np.asarray(obj["epsilon"], dtype=np.float64).reshape(f_out, f_in)
        alpha = np.asarray(obj["alpha"], dtype=np.float64).reshape(L1, f_out, f_in)
        beta = None if tied else np.asarray(obj["beta"], dtype=np.float64).reshape(L2, f_out, f_in)
        return cls(eps, alpha, beta, Nonlinearity.parse(obj["nonlinearity"]), tied, obj.get("shift_scale", 1.0))


@dataclass
class ScnnModel:
    complex: SimplicialComplex
    k: int
    layers: list[ScnnLayer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        if self.layers[0].f_in != 1 or self.layers[-1].f_out != 1:
            raise ValueError("model must take one input feature and produce one output feature")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.f_out != b.f_in:
                raise ValueError(f"layer widths do not chain: {a.f_out} -> {b.f_in}")

    @property
    def n_parameters(self) -> int:
        return sum(layer.n_parameters for layer in self.layers)

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.parameters()]

    def set_parameters(self, params: list[np.ndarray]) -> None:
        i = 0
        for layer in self.layers:
            n = len(layer.parameters())
            layer.set_parameters(params[i : i + n])
            i += n
        if i != len(params):
            raise ValueError(f"expected {i} parameter arrays, got {len(params)}")

    def copy(self) -> "ScnnModel":
        return ScnnModel(self.complex, self.k, [layer.copy() for layer in self.layers])

    def on(self, X: SimplicialComplex) -> "ScnnModel":
        """Same parameters (shared, not copied) bound to another complex."""
        return ScnnModel(X, self.k, self.layers)

    def to_json(self) -> dict:
        return {"format": 1, "order": self.k, "layers": [layer.to_json() for layer in self.layers]}

    @classmethod
    def from_json(cls, obj: dict, X: SimplicialComplex) -> "ScnnModel":
        if obj.get("format", 1) != 1:
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        return cls(X, int(obj["order"]), [ScnnLayer.from_json(layer) for layer in obj["layers"]])


def init_model(
    X: SimplicialComplex,
    k: int,
    P: int,
    F: int,
    L1: int,
    L2: int,
    nonlinearity: Nonlinearity | str = "leaky_relu",
    seed: int = 0,
    tied: bool = False,
    normalize: bool = False,
) -> ScnnModel:
    """Random model with widths (1, F, ..., F, 1).

    Coefficients are i.i.d. uniform on [-s, s], s = (f_in * filter_length)^-1/2.
    ``tied=True`` builds the SNN special case and requires ``L1 == L2``.
    ``normalize=True`` makes every layer shift by L / lambda_max(L_k) instead
    of L; the same scale is used for lower and upper shifts so tied layers
    remain polynomials in the Hodge Laplacian.
    """
    if P < 1 or F < 1:
        raise ValueError("need P >= 1 layers and F >= 1 features")
    if tied and L1 != L2:
        raise ValueError("tied (SNN) layers need L1 == L2")
    if isinstance(nonlinearity, str):
        nonlinearity = Nonlinearity.parse(nonlinearity)
    widths = [1] + [F] * (P - 1) + [1]
    rng = np.random.default_rng(seed)
    length = 1 + L1 if tied else 1 + L1 + L2
    scale = spectral_scale(X, k) if normalize else 1.0
    layers = []
    for f_in, f_out in zip(widths, widths[1:]):
        s = (f_in * length) ** -0.5
        eps = rng.uniform(-s, s, size=(f_out, f_in))
        alpha = rng.uniform(-s, s, size=(L1, f_out, f_in))
        beta = None if tied else rng.uniform(-s, s, size=(L2, f_out, f_in))
        layers.append(ScnnLayer(eps, alpha, beta, nonlinearity, tied, scale))
    return ScnnModel(X, k, layers)


def init_snn(
    X: SimplicialComplex, k: int, P: int, F: int, L: int, nonlinearity="leaky_relu", seed: int = 0, normalize: bool = False
) -> ScnnModel:
    """SNN baseline: every filter is sum_{l=0..L} h_l L_k^l (length L + 1)."""
    return init_model(X, k, P, F, L, L, nonlinearity, seed, tied=True, normalize=normalize)


def spectral_scale(X: SimplicialComplex, k: int) -> float:
    """Largest eigenvalue of the Hodge Laplacian L_k (1.0 if L_k vanishes)."""
    L = X.laplacians(k).full
    if L.shape[0] == 0 or L.nnz == 0:
        return 1.0
    return float(max(sym_eig(L).eigenvalues[-1], 1.0))


@dataclass
class LayerRecord:
    inputs: np.ndarray
    lower_powers: list[np.ndarray]
    upper_powers: list[np.ndarray]
    preactivation: np.ndarray
    output: np.ndarray


@dataclass
class Tape:
    """Intermediates of a forward pass, consumed by the backward pass."""

    complex: SimplicialComplex
    k: int
    records: list[LayerRecord]

    def z(self, layer: ScnnModel | ScnnLayer, p: int, f: int, g: int) -> np.ndarray:
        """Intermediate output of filter (f, g) in layer ``p`` (0-based)."""
        L = layer.layers[p] if isinstance(layer, ScnnModel) else layer
        rec = self.records[p]
        out = L.epsilon[f, g] * rec.inputs[:, g]
        for a, S in zip(L.alpha[:, f, g], rec.lower_powers):
            out = out + a * S[:, g]
        for b, S in zip(L.beta[:, f, g], rec.upper_powers):
            out = out + b * S[:, g]
        return out


def _powers(shift, X: SimplicialComplex, k: int, H: np.ndarray, order: int, scale: float) -> list[np.ndarray]:
    out, Z = [], H
    for _ in range(order):
        Z = shift(X, k, Z)
        if scale != 1.0:
            Z = Z / scale
        out.append(Z)
    return out


def _layer_forward(X: SimplicialComplex, k: int, layer: ScnnLayer, inputs: np.ndarray) -> LayerRecord:
    H = np.asarray(inputs, dtype=np.float64)
    if H.ndim != 2 or H.shape != (X.N[k], layer.f_in):
        raise ValueError(f"layer input must have shape ({X.N[k]}, {layer.f_in}), got {H.shape}")
    L1, L2 = layer.orders
    lower = _powers(filters.shift_lower, X, k, H, L1, layer.shift_scale)
    upper = _powers(filters.shift_upper, X, k, H, L2, layer.shift_scale)
    Z = H @ layer.epsilon.T
    for a, S in zip(layer.alpha, lower):
        Z = Z + S @ a.T
    for b, S in zip(layer.beta, upper):
        Z = Z + S @ b.T
    return LayerRecord(H, lower, upper, Z, layer.nonlinearity(Z))


def layer_forward(X: SimplicialComplex, k: int, layer: ScnnLayer, inputs: np.ndarray) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    return _layer_forward(X, k, layer, inputs).output


def model_forward(model: ScnnModel, x0: np.ndarray, X: SimplicialComplex | None = None) -> tuple[np.ndarray, Tape]:
    X = model.complex if X is None else X
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (X.N[model.k],):
        raise ValueError(f"input must have length N[{model.k}] = {X.N[model.k]}, got shape {x0.shape}")
    H = x0[:, None]
    records = []
    for layer in model.layers:
        rec = _layer_forward(X, model.k, layer, H)
        records.append(rec)
        H = rec.output
    return H[:, 0].copy(), Tape(X, model.k, records)


def predict(model: ScnnModel, x0: np.ndarray) -> np.ndarray:
    return model_forward(model, x0)[0]
