"""Minimal deterministic neural toolkit: dense, GRU, attention, Adam.

Everything runs on float64 numpy arrays with handwritten backward passes,
verified against central finite differences. No autodiff graph; the two
fixed architectures (feed-forward classifier, bidirectional GRU with
attention) cover the toolkit's needs.
"""

from .layers import (
    ACTIVATIONS,
    AttentionHead,
    DenseLayer,
    GruCell,
    attend,
    binary_cross_entropy,
    forward_dense,
    forward_gru_bidirectional,
)
from .models import Mlp, SequenceClassifier
from .optim import AdamState, adam_step, clip_by_global_norm
from .gradcheck import check_gradients
from .serialize import load_params, save_params

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "AttentionHead",
    "DenseLayer",
    "GruCell",
    "Mlp",
    "SequenceClassifier",
    "adam_step",
    "attend",
    "binary_cross_entropy",
    "check_gradients",
    "clip_by_global_norm",
    "forward_dense",
    "forward_gru_bidirectional",
    "load_params",
    "save_params",
]
