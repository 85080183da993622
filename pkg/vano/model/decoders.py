"""Decoders D(z)(x): a latent code and query points to function values.

``forward`` maps z of shape (B, n) and coordinates of shape (P, d) to values
of shape (B, P). Query points are independent of each other, so any grid,
including ones finer than the training grid, can be decoded.
"""
from abc import ABC, abstractmethod
from typing import List

import numpy as np

from vano.core import ops
from vano.core.layers import forward_dense, forward_mlp, init_dense, init_mlp
from vano.core.ops import ArrayLike
from vano.core.params import ParamStore
from vano.core.rng import RandomStream
from vano.core.tape import Node
from vano.encodings import Encoding
from vano.exceptions import ConfigError, DimensionError
from vano.schemas import DecoderSpec


class Decoder(ABC):
    prefix = "dec"

    def __init__(self, spec: DecoderSpec, encoding: Encoding):
        self.spec = spec
        self.encoding = encoding

    @property
    def latent_dim(self) -> int:
        return self.spec.latent_dim

    @property
    def is_linear(self) -> bool:
        return False

    def features(self, xs: np.ndarray) -> np.ndarray:
        return self.encoding.encode(xs)

    def _latent(self, z: ArrayLike) -> Node:
        z = ops.as_node(z)
        if z.value.ndim != 2 or z.shape[1] != self.latent_dim:
            raise DimensionError(f"decoder expects latent codes of shape (batch, {self.latent_dim}), got {z.shape}")
        return z

    @abstractmethod
    def init_params(self, store: ParamStore, stream: RandomStream) -> None:
        ...

    @abstractmethod
    def forward(self, store: ParamStore, z: ArrayLike, xs: np.ndarray) -> Node:
        ...

    def decode_field(self, store: ParamStore, z: np.ndarray, xs: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        values = self.forward(store, z[None, :] if single else z, xs).value
        return values[0] if single else values

    def decode(self, store: ParamStore, z: np.ndarray, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return float(self.decode_field(store, z, x[None, :])[0])


class LinearDecoder(Decoder):
    """D(z)(x) = sum_i z_i tau_i(gamma(x)) with one MLP emitting all n basis values."""

    @property
    def is_linear(self) -> bool:
        return self.spec.output_activation == "identity"

    def init_params(self, store: ParamStore, stream: RandomStream) -> None:
        widths = [self.encoding.output_dim, *self.spec.hidden, self.latent_dim]
        init_mlp(store, self.prefix, widths, stream, bias=self.spec.bias)

    def basis(self, store: ParamStore, xs: np.ndarray) -> Node:
        depth = len(self.spec.hidden) + 1
        return forward_mlp(store, self.prefix, self.features(xs), depth, self.spec.activation)

    def forward(self, store: ParamStore, z: ArrayLike, xs: np.ndarray) -> Node:
        z = self._latent(z)
        tau = self.basis(store, xs)
        return ops.activate(ops.matmul_t(z, tau), self.spec.output_activation)


class ConcatDecoder(Decoder):
    """f([z, gamma(x)]) through one MLP."""

    def init_params(self, store: ParamStore, stream: RandomStream) -> None:
        widths = [self.latent_dim + self.encoding.output_dim, *self.spec.hidden, 1]
        init_mlp(store, self.prefix, widths, stream, bias=self.spec.bias)

    def forward(self, store: ParamStore, z: ArrayLike, xs: np.ndarray) -> Node:
        z = self._latent(z)
        batch = z.shape[0]
        feats = self.features(xs)[None, :, :]
        z_rows = ops.reshape(z, (batch, 1, self.latent_dim))

        depth = len(self.spec.hidden) + 1
        activation = self.spec.output_activation if depth == 1 else self.spec.activation
        h = forward_dense(store, f"{self.prefix}.0", [z_rows, feats], activation)
        for i in range(1, depth):
            last = i == depth - 1
            h = forward_dense(
                store, f"{self.prefix}.{i}", h, self.spec.output_activation if last else self.spec.activation
            )
        return ops.reshape(h, (batch, feats.shape[1]))


def split_sizes(latent_dim: int, chunks: int) -> List[int]:
    """Contiguous chunk sizes; the last chunk takes the remainder."""
    if chunks < 1 or latent_dim < chunks:
        raise ConfigError(f"cannot split a latent of size {latent_dim} into {chunks} chunks")
    base = latent_dim // chunks
    return [base] * (chunks - 1) + [latent_dim - base * (chunks - 1)]


class SplitConcatDecoder(Decoder):
    """Hidden layer h receives [z_h, previous activation]; layer 0 sees gamma(x)."""

    def __init__(self, spec: DecoderSpec, encoding: Encoding):
        super().__init__(spec, encoding)
        self.chunks = split_sizes(spec.latent_dim, len(spec.hidden))

    def init_params(self, store: ParamStore, stream: RandomStream) -> None:
        previous = self.encoding.output_dim
        for i, (width, chunk) in enumerate(zip(self.spec.hidden, self.chunks)):
            init_dense(store, f"{self.prefix}.{i}", chunk + previous, width, stream, bias=self.spec.bias)
            previous = width
        init_dense(store, f"{self.prefix}.{len(self.spec.hidden)}", previous, 1, stream, bias=self.spec.bias)

    def forward(self, store: ParamStore, z: ArrayLike, xs: np.ndarray) -> Node:
        z = self._latent(z)
        batch = z.shape[0]
        h = ops.as_node(self.features(xs)[None, :, :])
        start = 0
        for i, chunk in enumerate(self.chunks):
            z_chunk = ops.reshape(ops.take(z, slice(start, start + chunk), axis=1), (batch, 1, chunk))
            h = forward_dense(store, f"{self.prefix}.{i}", [z_chunk, h], self.spec.activation)
            start += chunk
        out = forward_dense(store, f"{self.prefix}.{len(self.chunks)}", h, self.spec.output_activation)
        return ops.reshape(out, (batch, out.shape[1]))


DECODERS = {
    "linear": LinearDecoder,
    "concat": ConcatDecoder,
    "split_concat": SplitConcatDecoder,
}


def build_decoder(spec: DecoderSpec, encoding: Encoding) -> Decoder:
    return DECODERS[spec.kind](spec, encoding)
