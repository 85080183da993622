from typing import Sequence

import numpy as np

from vano.exceptions import DimensionError


def uniform_grid(extents: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Endpoint-inclusive tensor grid, point-major with the last axis fastest."""
    extents = np.asarray(extents, dtype=np.float64).reshape(-1, 2)
    if len(counts) != extents.shape[0]:
        raise DimensionError(f"{len(counts)} grid counts for a {extents.shape[0]}-D domain")
    axes = [np.linspace(lo, hi, int(count)) for (lo, hi), count in zip(extents, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([axis.ravel() for axis in mesh], axis=1)


def axis_counts(grid: np.ndarray) -> list:
    return [int(np.unique(grid[:, k]).size) for k in range(grid.shape[1])]
