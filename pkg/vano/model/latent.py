from dataclasses import dataclass

import numpy as np

from vano.core import ops
from vano.core.ops import ArrayLike
from vano.core.rng import RandomStream
from vano.core.tape import Node


@dataclass(frozen=True)
class LatentGaussian:
    """Diagonal Gaussian posterior; rows are examples when 2-D."""

    mu: np.ndarray
    log_sigma: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)

    @property
    def latent_dim(self) -> int:
        return self.mu.shape[-1]

    def sample(self, eps: np.ndarray) -> np.ndarray:
        return sample_latent(self.mu, self.log_sigma, eps).value


def sample_latent(mu: ArrayLike, log_sigma: ArrayLike, eps: ArrayLike) -> Node:
    """z = mu + exp(log_sigma) * eps, differentiable in mu and log_sigma."""
    return ops.add(mu, ops.mul(ops.exp(log_sigma), eps))


class Prior:
    """Standard normal on R^n."""

    def __init__(self, latent_dim: int):
        self.latent_dim = int(latent_dim)

    def sample(self, stream: RandomStream, count: int) -> np.ndarray:
        return stream.normal((count, self.latent_dim))

    def log_density(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        return -0.5 * np.sum(z * z, axis=-1) - 0.5 * self.latent_dim * np.log(2.0 * np.pi)
