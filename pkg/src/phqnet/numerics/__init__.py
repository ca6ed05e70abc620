"""Dense-tensor numerics with reverse-mode gradients.

Hot kernels (causal convolution, LSTM recurrence) come from a compiled
extension when available and from numpy otherwise; see :mod:`.backend`.
"""

from . import backend
from .ops import (
    BCE_EPS,
    add,
    bce_loss,
    causal_conv1d,
    concat,
    dense,
    dropout,
    lstm_forward,
    lstm_layer,
    masked_max,
    masked_mean,
    mse_loss,
    mul,
    relu,
    reshape,
    sigmoid,
    take_last,
    total,
)
from .optim import AdamState, ParamSet, adam_step, backward, glorot_uniform
from .tensor import DEFAULT_DTYPE, Tensor, as_tensor, tensor

__all__ = [
    "AdamState",
    "BCE_EPS",
    "DEFAULT_DTYPE",
    "ParamSet",
    "Tensor",
    "adam_step",
    "add",
    "as_tensor",
    "backend",
    "backward",
    "bce_loss",
    "causal_conv1d",
    "concat",
    "dense",
    "dropout",
    "glorot_uniform",
    "lstm_forward",
    "lstm_layer",
    "masked_max",
    "masked_mean",
    "mse_loss",
    "mul",
    "relu",
    "reshape",
    "sigmoid",
    "take_last",
    "tensor",
    "total",
]
