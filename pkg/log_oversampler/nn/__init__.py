"""Minimal dense numeric layer: primitives, parameters, ADAM and gradient checking."""

from .functional import (
    affine,
    affine_backward,
    binary_cross_entropy,
    clip_grad_norm,
    cross_entropy,
    dropout_mask,
    l1_penalty,
    log_softmax,
    relu,
    sigmoid,
    softmax,
    softmax_cross_entropy_grad,
    tanh_act,
)
from .gradcheck import grad_check, numerical_gradient, relative_error
from .optim import Adam, AdamState, adam_step
from .tensor import (
    DEFAULT_DTYPE,
    Matrix,
    ParamTensor,
    decode_matrix,
    encode_matrix,
    glorot_uniform,
)

__all__ = [
    "DEFAULT_DTYPE",
    "Matrix",
    "ParamTensor",
    "glorot_uniform",
    "encode_matrix",
    "decode_matrix",
    "affine",
    "affine_backward",
    "sigmoid",
    "tanh_act",
    "relu",
    "softmax",
    "log_softmax",
    "cross_entropy",
    "softmax_cross_entropy_grad",
    "binary_cross_entropy",
    "dropout_mask",
    "l1_penalty",
    "clip_grad_norm",
    "AdamState",
    "adam_step",
    "Adam",
    "grad_check",
    "numerical_gradient",
    "relative_error",
]
