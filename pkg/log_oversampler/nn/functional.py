"""Dense layer primitives with hand-written backward passes."""

import numpy as np

from ..errors import ArgumentError, ShapeError
from .tensor import Matrix

CE_CLIP = 1e-12


def affine(x: Matrix, W: Matrix, b: Matrix) -> Matrix:
    """Compute ``x @ W + b`` for x [batch x d_in], W [d_in x d_out], b [1 x d_out]."""
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError("affine: inner dimensions disagree", x.shape, W.shape)
    if b.shape != (1, W.shape[1]):
        raise ShapeError("affine: bias does not match output width", b.shape, W.shape)
    return x @ W + b


def affine_backward(
    x: Matrix, W: Matrix, grad_out: Matrix
) -> tuple[Matrix, Matrix, Matrix]:
    """Return (dx, dW, db) for ``affine`` given the upstream gradient."""
    return grad_out @ W.T, x.T @ grad_out, grad_out.sum(axis=0, keepdims=True)


def sigmoid(x: Matrix) -> Matrix:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def tanh_act(x: Matrix) -> Matrix:
    return np.tanh(x)


def relu(x: Matrix) -> Matrix:
    return np.maximum(x, 0)


def _check_logits(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits)
    if logits.size == 0 or logits.shape[-1] == 0:
        raise ArgumentError("softmax of an empty vector")
    return logits


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, max-shifted."""
    logits = _check_logits(logits)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Log of ``softmax`` over the last axis, computed without taking log of the ratio."""
    logits = _check_logits(logits)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(pred: np.ndarray, target: np.ndarray) -> float:
    """
    Categorical cross-entropy ``-sum(target * log(pred + 1e-12))``.

    Batches (2-D inputs) return the mean over rows.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeError("cross_entropy: prediction and target differ", pred.shape, target.shape)
    per_row = -(target * np.log(pred + CE_CLIP)).sum(axis=-1)
    return float(np.mean(per_row))


def softmax_cross_entropy_grad(pred: Matrix, target: Matrix) -> Matrix:
    """Gradient of the batch-mean CE of ``softmax(logits)`` w.r.t. the logits."""
    if pred.shape != target.shape:
        raise ShapeError("softmax_cross_entropy_grad: shapes differ", pred.shape, target.shape)
    return (pred - target) / pred.shape[0]


def binary_cross_entropy(prob: np.ndarray, label: np.ndarray) -> float:
    """Mean binary cross-entropy of probabilities against 0/1 labels."""
    prob = np.asarray(prob)
    label = np.asarray(label)
    if prob.shape != label.shape:
        raise ShapeError("binary_cross_entropy: shapes differ", prob.shape, label.shape)
    loss = -(label * np.log(prob + CE_CLIP) + (1 - label) * np.log(1 - prob + CE_CLIP))
    return float(np.mean(loss))


def dropout_mask(
    shape: int | tuple[int, ...], keep_prob: float, rng: np.random.Generator
) -> np.ndarray:
    """
    Inverted dropout mask.

    Each entry is ``1 / keep_prob`` with probability ``keep_prob`` and 0 otherwise,
    so the mask has expectation 1 and inference needs no rescaling.
    """
    if not 0.0 < keep_prob <= 1.0:
        raise ArgumentError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if isinstance(shape, int) and shape < 1:
        raise ArgumentError(f"Mask length must be positive, got {shape}")
    keep = rng.random(shape) < keep_prob
    return keep.astype(np.float32) / np.float32(keep_prob)


def l1_penalty(W: Matrix, lam: float) -> tuple[float, Matrix]:
    """Return ``lam * sum(|W|)`` and its subgradient ``lam * sign(W)`` (sign(0) = 0)."""
    if lam < 0:
        raise ArgumentError(f"L1 coefficient must be non-negative, got {lam}")
    return float(lam * np.abs(W).sum()), lam * np.sign(W)


def clip_grad_norm(grads: list[Matrix], max_norm: float) -> float:
    """
    Scale ``grads`` in place so their global L2 norm is at most ``max_norm``.

    Returns:
        The norm before clipping
    """
    total = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total
