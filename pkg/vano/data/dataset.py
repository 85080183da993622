from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from vano.core.rng import Purpose, rng_stream
from vano.data.grid import axis_counts
from vano.exceptions import ConfigError, DimensionError, InputError
from vano.schemas import Provenance


@dataclass
class Dataset:
    """N functions measured on one shared grid.

    ``extents`` is (d, 2) with per-axis (min, max), ``grid`` is (m, d) and
    ``values`` is (N, m), sample-major.
    """

    extents: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance(generator="unknown", seed=0))

    def __post_init__(self):
        self.extents = np.asarray(self.extents, dtype=np.float64).reshape(-1, 2)
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grid.ndim != 2 or self.grid.shape[1] != self.extents.shape[0]:
            raise DimensionError(f"grid of shape {self.grid.shape} does not match a {self.domain_dim}-D domain")
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.shape[0]:
            raise DimensionError(f"values of shape {self.values.shape} do not match {self.grid.shape[0]} grid points")
        if self.values.shape[0] < 1:
            raise ConfigError("a dataset needs at least one function")
        if not np.all(np.isfinite(self.values)):
            raise InputError("dataset contains non-finite values")

    @property
    def domain_dim(self) -> int:
        return self.extents.shape[0]

    @property
    def m(self) -> int:
        return self.grid.shape[0]

    @property
    def domain_measure(self) -> float:
        return float(np.prod(self.extents[:, 1] - self.extents[:, 0]))

    @property
    def counts(self) -> list:
        return axis_counts(self.grid)

    def __len__(self) -> int:
        return self.values.shape[0]

    def subset(self, indices: np.ndarray, note: str = "subset") -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        params = {**self.provenance.params, note: len(indices)}
        provenance = Provenance(generator=self.provenance.generator, seed=self.provenance.seed, params=params)
        return Dataset(self.extents, self.grid, self.values[indices], provenance)

    def same_grid(self, other: "Dataset") -> bool:
        return self.grid.shape == other.grid.shape and np.array_equal(self.grid, other.grid)


def split_indices(n: int, n_train: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    if not 0 < n_train < n:
        raise ConfigError(f"n_train must lie in [1, {n - 1}], got {n_train}")
    order = rng_stream(seed, Purpose.SHUFFLE, 0).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def train_test_split(ds: Dataset, n_train: int, seed: int) -> Tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(len(ds), n_train, seed)
    return ds.subset(train_idx, "split_train"), ds.subset(test_idx, "split_test")
