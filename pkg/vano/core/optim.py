from dataclasses import dataclass

import numpy as np

from vano.core.params import ParamStore
from vano.exceptions import NumericalError


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    base_lr: float = 1e-3
    decay_rate: float = 0.9
    decay_every: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamStore, **hyper) -> "AdamState":
        return cls(m=np.zeros_like(params.values), v=np.zeros_like(params.values), **hyper)


def effective_lr(state: AdamState) -> float:
    return state.base_lr * state.decay_rate ** (state.step // state.decay_every)


def check_finite_grads(params: ParamStore) -> None:
    if np.all(np.isfinite(params.grads)):
        return
    for name in params.names():
        grad = params.grad_view(name)
        if not np.all(np.isfinite(grad)):
            bad = int(np.count_nonzero(~np.isfinite(grad)))
            raise NumericalError(f"non-finite gradient in tensor '{name}' ({bad} entries)", tensor=name)


def adam_step(state: AdamState, params: ParamStore) -> float:
    """One bias-corrected Adam update; returns the learning rate used.

    Nothing is written back unless the new parameters are finite, so a
    failed step leaves both the parameters and the moments untouched.
    """
    check_finite_grads(params)
    lr = effective_lr(state)
    g = params.grads
    t = state.step + 1

    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    values = params.values - lr * m_hat / (np.sqrt(v_hat) + state.eps)

    if not np.all(np.isfinite(values)):
        raise NumericalError(f"parameters became non-finite at step {t}")
    state.m[...] = m
    state.v[...] = v
    params.values[...] = values
    state.step = t
    return lr
