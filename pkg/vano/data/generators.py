"""Synthetic functional datasets.

Every sample j draws from its own stream rng_stream(seed, data, offset + j),
so datasets are identical whatever the worker count, and a test set can be
made independent of a training set by shifting ``offset``.
"""
import logging
from typing import Callable, Tuple

import numpy as np

from vano.core.rng import Purpose, rng_stream
from vano.data.dataset import Dataset
from vano.data.grid import uniform_grid
from vano.dependencies import ordered_map
from vano.exceptions import ConfigError
from vano.schemas import BumpsParams, GRFParams, Provenance

logger = logging.getLogger(__name__)

UNIT_INTERVAL = np.array([[0.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 1.0], [0.0, 1.0]])


def grf_covariance_eigs(p: GRFParams) -> np.ndarray:
    i = np.arange(1, p.n_eig + 1, dtype=np.float64)
    return ((2.0 * np.pi * i) ** 2 + p.tau ** 2) ** (-p.alpha)


def grf_eigenfunction(i: int, x: np.ndarray) -> np.ndarray:
    # reduce i*x mod 1 first so sin vanishes exactly at x = 0 and x = 1
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(2.0) * np.sin(2.0 * np.pi * np.mod(i * x, 1.0))


def grf_eigpair(i: int, p: GRFParams) -> Tuple[float, Callable[[np.ndarray], np.ndarray]]:
    if i < 1:
        raise ConfigError(f"eigenpair index starts at 1, got {i}")
    lam = ((2.0 * np.pi * i) ** 2 + p.tau ** 2) ** (-p.alpha)
    return float(lam), lambda x: grf_eigenfunction(i, x)


def grf_basis(p: GRFParams, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    return np.stack([grf_eigenfunction(i, xs) for i in range(1, p.n_eig + 1)], axis=1)


def sample_grf(p: GRFParams, seed: int, offset: int = 0) -> Dataset:
    """Truncated Karhunen-Loeve samples u = sum_i xi_i sqrt(lambda_i) phi_i on [0, 1]."""
    grid = uniform_grid(UNIT_INTERVAL, [p.m])
    scaled_basis = grf_basis(p, grid[:, 0]) * np.sqrt(grf_covariance_eigs(p))[None, :]

    def draw(j: int) -> np.ndarray:
        xi = rng_stream(seed, Purpose.DATA, offset + j).normal(p.n_eig)
        return scaled_basis @ xi

    values = np.stack(ordered_map(draw, range(p.n)))
    logger.info(f"Data: GRF | N={p.n} m={p.m} alpha={p.alpha} tau={p.tau} n_eig={p.n_eig} seed={seed}")
    provenance = Provenance(generator="grf", seed=seed, params={**p.model_dump(), "offset": offset})
    return Dataset(UNIT_INTERVAL, grid, values, provenance)


def bump_normalization(standard: bool) -> float:
    # verbatim formula uses (2 pi)^(-1/2); the standard bivariate density uses (2 pi)^(-1)
    return (2.0 * np.pi) ** (-1.0) if standard else (2.0 * np.pi) ** (-0.5)


def gaussian_bump(grid: np.ndarray, mu: np.ndarray, sigma: float, standard: bool = False) -> np.ndarray:
    """Density with covariance sigma * I evaluated on (m, 2) points."""
    sq = np.sum((grid - mu[None, :]) ** 2, axis=1)
    return bump_normalization(standard) / sigma * np.exp(-0.5 * sq / sigma)


def sample_bumps(p: BumpsParams, seed: int, offset: int = 0) -> Dataset:
    grid = uniform_grid(UNIT_SQUARE, [p.side, p.side])

    def draw(j: int) -> np.ndarray:
        mu_x, mu_y, u = rng_stream(seed, Purpose.DATA, offset + j).uniform(3)
        sigma = p.sigma_max * u + p.sigma_offset
        return gaussian_bump(grid, np.array([mu_x, mu_y]), sigma, p.standard_normalization)

    values = np.stack(ordered_map(draw, range(p.n)))
    logger.info(f"Data: bumps | N={p.n} side={p.side} m={grid.shape[0]} seed={seed}")
    provenance = Provenance(generator="bumps", seed=seed, params={**p.model_dump(), "offset": offset})
    return Dataset(UNIT_SQUARE, grid, values, provenance)
