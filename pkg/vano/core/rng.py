from enum import Enum
from typing import Sequence, Union

import numpy as np


class Purpose(str, Enum):
    DATA = "data"
    INIT = "init"
    LATENT_NOISE = "latent_noise"
    RFF_MATRIX = "rff_matrix"
    SHUFFLE = "shuffle"


# stable codes: reordering the enum must not change existing streams
_PURPOSE_CODES = {
    Purpose.DATA: 1,
    Purpose.INIT: 2,
    Purpose.LATENT_NOISE: 3,
    Purpose.RFF_MATRIX: 4,
    Purpose.SHUFFLE: 5,
}

Size = Union[int, Sequence[int]]


class RandomStream:
    """Deterministic stream keyed by (seed, purpose, index).

    Uniforms come from PCG64; normals are built with Box-Muller from
    consecutive uniform pairs so draws depend only on the key and call order.
    """

    def __init__(self, seed: int, purpose: Union[Purpose, str], index: int = 0):
        self.seed = int(seed)
        self.purpose = Purpose(purpose)
        self.index = int(index)
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(_PURPOSE_CODES[self.purpose], self.index)
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def uniform(self, size: Size) -> np.ndarray:
        return self._generator.random(size)

    def normal(self, size: Size) -> np.ndarray:
        shape = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        pairs = (count + 1) // 2
        u = self.uniform((pairs, 2))
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        draws = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).ravel()
        return draws[:count].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, purpose={self.purpose.value}, index={self.index})"


def rng_stream(seed: int, purpose: Union[Purpose, str], index: int = 0) -> RandomStream:
    return RandomStream(seed, purpose, index)
