from vano.data.dataset import Dataset, split_indices, train_test_split
from vano.data.generators import grf_basis, grf_covariance_eigs, grf_eigpair, sample_bumps, sample_grf
from vano.data.grid import axis_counts, uniform_grid
from vano.data.storage import load_dataset, save_dataset

__all__ = [
    "Dataset",
    "axis_counts",
    "grf_basis",
    "grf_covariance_eigs",
    "grf_eigpair",
    "load_dataset",
    "sample_bumps",
    "sample_grf",
    "save_dataset",
    "split_indices",
    "train_test_split",
    "uniform_grid",
]
