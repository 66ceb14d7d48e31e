"""ADAM optimizer with bias correction."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, NumericError, ShapeError
from .functional import clip_grad_norm
from .tensor import Matrix, ParamTensor


@dataclass
class AdamState:
    """Moment estimates for one parameter."""

    m: Matrix
    v: Matrix
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, param: ParamTensor, **hyper) -> "AdamState":
        return cls(
            m=np.zeros_like(param.value), v=np.zeros_like(param.value), **hyper
        )


def adam_step(param: ParamTensor, state: AdamState) -> None:
    """
    Apply one bias-corrected ADAM update to ``param`` in place.

    The gradient is left untouched; callers reset it.
    """
    if state.m.shape != param.shape or state.v.shape != param.shape:
        raise ShapeError("Adam state does not match parameter", state.m.shape, param.shape)
    if state.t < 0:
        raise ArgumentError(f"Adam step counter must be non-negative, got {state.t}")
    g = param.grad
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * g
    state.v = state.beta2 * state.v + (1 - state.beta2) * np.square(g)
    m_hat = state.m / (1 - state.beta1**state.t)
    v_hat = state.v / (1 - state.beta2**state.t)
    update = state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon)
    param.value = (param.value - update).astype(param.value.dtype, copy=False)


@dataclass
class Adam:
    """ADAM over a fixed set of named parameters."""

    params: dict[str, ParamTensor]
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float | None = None
    states: dict[str, AdamState] = field(init=False, repr=False)

    def __post_init__(self):
        self.states = {
            name: AdamState.fresh(
                p,
                alpha=self.alpha,
                beta1=self.beta1,
                beta2=self.beta2,
                epsilon=self.epsilon,
            )
            for name, p in self.params.items()
        }

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> float:
        """
        Update every parameter from its accumulated gradient.

        Returns:
            Global gradient norm before clipping
        """
        grads = [p.grad for p in self.params.values()]
        norm = clip_grad_norm(grads, self.clip_norm or 0.0)
        if not np.isfinite(norm):
            raise NumericError("Non-finite gradient, update aborted")
        for name, p in self.params.items():
            adam_step(p, self.states[name])
        return norm
