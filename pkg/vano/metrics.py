"""Distances between distributions of functions sampled on a shared grid."""
import logging
from concurrent.futures import as_completed
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from vano.data.generators import grf_basis, grf_covariance_eigs
from vano.dependencies import get_executor
from vano.exceptions import ConfigError, DimensionError, NumericalError, UnsupportedError
from vano.model.vano_model import VanoModel
from vano.objective import Quadrature
from vano.schemas import CircularStats, GRFParams, KernelFamily
from vano.settings import settings

logger = logging.getLogger(__name__)

TILE_ROWS = 256


@dataclass(frozen=True)
class CovarianceMatrix:
    C: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {self.C.shape}")

    @property
    def size(self) -> int:
        return self.C.shape[0]

    def is_symmetric(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.C, self.C.T, rtol=0.0, atol=atol))

    def is_psd(self, tol: float = 1e-8) -> bool:
        return bool(np.linalg.eigvalsh(0.5 * (self.C + self.C.T)).min() >= -tol)


def covariance_analytic(p: GRFParams, grid: np.ndarray) -> CovarianceMatrix:
    phi = grf_basis(p, np.asarray(grid, dtype=np.float64).reshape(-1))
    return CovarianceMatrix((phi * grf_covariance_eigs(p)) @ phi.T)


def covariance_model_linear(model: VanoModel, grid: np.ndarray) -> CovarianceMatrix:
    """sum_i tau_i tau_i^T with tau_i read off by decoding the unit codes e_i."""
    if not model.decoder.is_linear:
        raise UnsupportedError(
            f"model covariance needs a linear decoder with identity output, got '{model.config.decoder}'"
        )
    tau = model.decode_field(np.eye(model.config.latent_dim), grid)
    return CovarianceMatrix(tau.T @ tau)


def covariance_empirical(values: np.ndarray) -> CovarianceMatrix:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    centered = values - values.mean(axis=0, keepdims=True)
    return CovarianceMatrix(centered.T @ centered / values.shape[0])


def hs_error(C, C_hat) -> float:
    """||C - C_hat||_F^2 / ||C||_F^2."""
    C = C.C if isinstance(C, CovarianceMatrix) else np.asarray(C, dtype=np.float64)
    C_hat = C_hat.C if isinstance(C_hat, CovarianceMatrix) else np.asarray(C_hat, dtype=np.float64)
    if C.shape != C_hat.shape:
        raise DimensionError(f"covariances of shape {C.shape} and {C_hat.shape}")
    reference = np.sum(C * C)
    if reference == 0.0:
        raise ConfigError("reference covariance is zero")
    diff = C - C_hat
    return float(np.sum(diff * diff) / reference)


def pca_spectrum(values: np.ndarray, q: Optional[Quadrature] = None) -> np.ndarray:
    """Descending eigenvalues of the empirical covariance operator W^1/2 C W^1/2."""
    C = covariance_empirical(values).C
    root = np.sqrt(q.weights) if q is not None else np.ones(C.shape[0])
    eigs = np.linalg.eigvalsh(root[:, None] * C * root[None, :])
    return eigs[::-1].copy()


def _reduce_tiles(fn: Callable[[slice], np.ndarray], tiles: List[slice]) -> np.ndarray:
    if settings.VANO_THREADS == 1 or len(tiles) == 1:
        parts = [fn(tile) for tile in tiles]
        return np.sum(parts, axis=0)
    with get_executor() as pool:
        futures = [pool.submit(fn, tile) for tile in tiles]
        done = futures if settings.VANO_DETERMINISTIC else as_completed(futures)
        out = None
        for future in done:
            part = future.result()
            out = part if out is None else out + part
        return out


def kernel_sums(
        A: np.ndarray,
        B: np.ndarray,
        sigmas: Sequence[float],
        weights: Optional[np.ndarray] = None,
        exponent_sign: int = -1,
) -> np.ndarray:
    """sum_{a, b} exp(sign * ||a - b||_w^2 / (2 sigma^2)) for every sigma."""
    root = np.sqrt(weights) if weights is not None else 1.0
    A_scaled, B_scaled = A * root, B * root
    inv = exponent_sign / (2.0 * np.asarray(sigmas, dtype=np.float64) ** 2)

    def tile_sum(rows: slice) -> np.ndarray:
        sq = cdist(A_scaled[rows], B_scaled, "sqeuclidean")
        with np.errstate(over="ignore"):
            return np.array([np.exp(sq * c).sum() for c in inv])

    tiles = [slice(i, i + TILE_ROWS) for i in range(0, A.shape[0], TILE_ROWS)]
    return _reduce_tiles(tile_sum, tiles)


def _check_sets(A: np.ndarray, B: np.ndarray, q: Optional[Quadrature]) -> Tuple[np.ndarray, np.ndarray]:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[0] == 0 or B.shape[0] == 0 or A.size == 0 or B.size == 0:
        raise ConfigError("mmd needs two non-empty sample sets")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"sample sets on {A.shape[1]} and {B.shape[1]} points")
    if q is not None and q.size != A.shape[1]:
        raise DimensionError(f"quadrature has {q.size} points, samples have {A.shape[1]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ConfigError("sample sets contain non-finite values")
    return A, B


def mmd_grid(
        A: np.ndarray,
        B: np.ndarray,
        sigmas: Sequence[float],
        q: Optional[Quadrature] = None,
        exponent_sign: int = -1,
) -> np.ndarray:
    """Squared MMD (biased V-statistic) at each sigma, floored at 0.

    With exponent sign +1 the kernel grows with distance and the sums can
    overflow; those sigmas come back as NaN and a warning is logged.
    """
    if exponent_sign not in (-1, 1):
        raise ConfigError(f"exponent sign must be -1 or 1, got {exponent_sign}")
    A, B = _check_sets(A, B, q)
    weights = q.weights if q is not None else None
    n, m = A.shape[0], B.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        k_aa = kernel_sums(A, A, sigmas, weights, exponent_sign)
        k_bb = kernel_sums(B, B, sigmas, weights, exponent_sign)
        k_ab = kernel_sums(A, B, sigmas, weights, exponent_sign)
        values = k_aa / n ** 2 + k_bb / m ** 2 - 2.0 * k_ab / (n * m)
    overflow = ~np.isfinite(values)
    if np.any(overflow):
        logger.warning(
            f"Metric: MMD | kernel sums overflow at {int(overflow.sum())} of {len(values)} sigma value(s) "
            f"with exponent sign {exponent_sign:+d}"
        )
    return np.where(overflow, np.nan, np.maximum(values, 0.0))


def mmd(
        A: np.ndarray,
        B: np.ndarray,
        sigma: float,
        q: Optional[Quadrature] = None,
        exponent_sign: int = -1,
) -> float:
    value = float(mmd_grid(A, B, [sigma], q, exponent_sign)[0])
    if np.isnan(value):
        raise NumericalError(f"kernel sums overflow at sigma={sigma:g} with exponent sign {exponent_sign:+d}")
    return value


def gmmd(
        A: np.ndarray,
        B: np.ndarray,
        fam: Optional[KernelFamily] = None,
        q: Optional[Quadrature] = None,
        exponent_sign: int = -1,
) -> Tuple[float, float]:
    """Largest MMD over the kernel family and the sigma attaining it.

    The grid is ascending and argmax returns the first maximum, so ties go
    to the smaller sigma.
    """
    sigmas = (fam or KernelFamily()).sigmas()
    values = mmd_grid(A, B, sigmas, q, exponent_sign)
    if np.all(np.isnan(values)):
        raise NumericalError(f"kernel sums overflow at every sigma with exponent sign {exponent_sign:+d}")
    best = int(np.nanargmax(values))
    logger.info(f"Metric: GMMD | value={values[best]:.6g} sigma={sigmas[best]:.4g} N={len(A)} M={len(B)}")
    return float(values[best]), float(sigmas[best])


def wrap_angles(thetas: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(thetas, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi


def circular_moment(thetas: np.ndarray, p: int) -> complex:
    return complex(np.sum(np.exp(1j * p * thetas)))


def circular_stats(thetas: np.ndarray) -> CircularStats:
    """Circular variance 1 - R1 and skewness R2 sin(phi2 - 2 phi1) / (1 - R1)^(3/2)."""
    thetas = wrap_angles(np.ravel(thetas))
    if thetas.size == 0:
        raise ConfigError("circular statistics need at least one angle")
    if np.all(thetas == thetas[0]):
        return CircularStats(variance=0.0, skewness=None)

    n = thetas.size
    z1, z2 = circular_moment(thetas, 1), circular_moment(thetas, 2)
    r1, r2 = abs(z1) / n, abs(z2) / n
    variance = min(max(1.0 - r1, 0.0), 1.0)
    if variance <= 1e-12:
        return CircularStats(variance=variance, skewness=None)
    skewness = r2 * np.sin(np.angle(z2) - 2.0 * np.angle(z1)) / variance ** 1.5
    return CircularStats(variance=variance, skewness=float(skewness))
