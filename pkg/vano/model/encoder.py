from typing import Tuple

import numpy as np

from vano.constants import LOG_CLAMP
from vano.core import ops
from vano.core.layers import forward_mlp, init_mlp
from vano.core.ops import ArrayLike
from vano.core.params import ParamStore
from vano.core.rng import RandomStream
from vano.core.tape import Node
from vano.exceptions import ContractError, DimensionError, InputError
from vano.model.latent import LatentGaussian
from vano.schemas import EncoderSpec


class Encoder:
    """MLP from point-wise measurements to (mu, log sigma) of a diagonal Gaussian."""

    prefix = "enc"

    def __init__(self, spec: EncoderSpec):
        self.spec = spec

    @property
    def widths(self):
        return [self.spec.input_dim, *self.spec.hidden, 2 * self.spec.latent_dim]

    def init_params(self, store: ParamStore, stream: RandomStream) -> None:
        init_mlp(store, self.prefix, self.widths, stream)

    def forward(self, store: ParamStore, u: ArrayLike) -> Tuple[Node, Node]:
        u = ops.as_node(u)
        if u.value.ndim != 2 or u.shape[1] != self.spec.input_dim:
            raise DimensionError(f"encoder expects (batch, {self.spec.input_dim}) measurements, got {u.shape}")
        if not np.all(np.isfinite(u.value)):
            raise InputError("encoder input contains non-finite measurements")

        n = self.spec.latent_dim
        out = forward_mlp(store, self.prefix, u, len(self.widths) - 1, self.spec.activation)
        mu = ops.take(out, slice(0, n), axis=1)
        log_sigma = ops.clip(ops.take(out, slice(n, 2 * n), axis=1), -LOG_CLAMP, LOG_CLAMP)
        if np.any(np.abs(log_sigma.value) > LOG_CLAMP):
            raise ContractError("log sigma escaped its clamp range")
        return mu, log_sigma

    def encode(self, store: ParamStore, u_values: np.ndarray) -> LatentGaussian:
        u_values = np.asarray(u_values, dtype=np.float64)
        single = u_values.ndim == 1
        mu, log_sigma = self.forward(store, u_values[None, :] if single else u_values)
        if single:
            return LatentGaussian(mu.value[0], log_sigma.value[0])
        return LatentGaussian(mu.value, log_sigma.value)
