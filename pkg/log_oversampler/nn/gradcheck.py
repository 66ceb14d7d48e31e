"""Central finite-difference gradient oracle."""

from collections.abc import Callable

import numpy as np

from ..errors import ArgumentError, NumericError
from .tensor import ParamTensor


def numerical_gradient(
    f: Callable[[ParamTensor], float], param: ParamTensor, step: float = 1e-6
) -> np.ndarray:
    """
    Central-difference gradient of ``f`` w.r.t. every coordinate of ``param``.

    The parameter is promoted to float64 for the duration of the check and restored
    afterwards, so downstream computations accumulate in 64-bit.
    """
    if step <= 0:
        raise ArgumentError(f"Finite-difference step must be positive, got {step}")
    original = param.value
    work = original.astype(np.float64)
    grad = np.zeros_like(work)
    try:
        param.value = work
        for index in np.ndindex(work.shape):
            saved = work[index]
            work[index] = saved + step
            plus = float(f(param))
            work[index] = saved - step
            minus = float(f(param))
            work[index] = saved
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericError(f"Non-finite loss at coordinate {index}")
            grad[index] = (plus - minus) / (2 * step)
    finally:
        param.value = original
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max over coordinates of |a - n| / max(|a|, |n|, 1e-8)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(
    f: Callable[[ParamTensor], float], param: ParamTensor, step: float = 1e-6
) -> float:
    """
    Compare ``param.grad`` (filled by the caller's backward pass) with finite differences.

    Args:
        f: Deterministic loss as a function of the parameter
        param: Parameter whose ``grad`` holds the analytic gradient
        step: Central-difference half-width

    Returns:
        Maximum relative error over all coordinates
    """
    return relative_error(param.grad, numerical_gradient(f, param, step))
