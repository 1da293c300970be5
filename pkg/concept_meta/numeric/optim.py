"""Adam optimizer and gradient clipping over a ParamStore."""
from dataclasses import dataclass, field

import numpy as np

from concept_meta.numeric.layers import Matrix
from concept_meta.numeric.store import ParamStore


@dataclass
class AdamState:
    """First/second moment estimates per parameter plus the timestep."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, Matrix] = field(default_factory=dict)
    v: dict[str, Matrix] = field(default_factory=dict)

    @classmethod
    def for_params(
        cls, params: ParamStore, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ) -> "AdamState":
        """Zero moments shaped like every parameter in the store."""
        state = cls(beta1=beta1, beta2=beta2, eps=eps)
        for name in params:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        return state


def adam_step(params: ParamStore, state: AdamState, lr: float) -> ParamStore:
    """
    Apply one bias-corrected Adam update in place, then zero the gradients.

    Args:
        params: Parameters with populated gradient buffers
        state: Moment estimates, updated in place
        lr: Step size

    Returns:
        The same ParamStore, updated
    """
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for name in params:
        g = params.grad(name)
        m = state.m.setdefault(name, np.zeros_like(g))
        v = state.v.setdefault(name, np.zeros_like(g))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        params[name] -= lr * m_hat / (np.sqrt(v_hat) + state.eps)

    params.step += 1
    params.zero_grad()
    return params


def clip_grad_norm(params: ParamStore, max_norm: float) -> float:
    """Scale all gradients so their global norm is at most max_norm; return the pre-clip norm."""
    norm = params.grad_norm()
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for name in params:
            params.grad(name)[...] *= scale
    return norm
