"""Simplicial convolutional filters and neural networks over Hodge Laplacians."""

from .complex import (
    LaplacianSet,
    SimplicialComplex,
    build_complex,
    permute_complex,
    reorient_complex,
)
from .filters import SimplicialFilter, apply_filter, materialize, snn_filter
from .scnn import Nonlinearity, ScnnLayer, ScnnModel, init_model, init_snn, model_forward

__version__ = "0.1.0"

__all__ = [
    "LaplacianSet",
    "Nonlinearity",
    "ScnnLayer",
    "ScnnModel",
    "SimplicialComplex",
    "SimplicialFilter",
    "apply_filter",
    "build_complex",
    "init_model",
    "init_snn",
    "materialize",
    "model_forward",
    "permute_complex",
    "reorient_complex",
    "snn_filter",
]
