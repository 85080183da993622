"""Functional ELBO under a white-noise likelihood.

For a decoded function d and data u on a quadrature (x_i, w_i)

    log-likelihood = -1/2 sum_i w_i d_i^2 + sum_i w_i d_i u_i

and the per-example loss is scale * E_z[-log-likelihood] + beta * KL, with
the expectation estimated from S reparameterised draws.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from vano.core import ops
from vano.core.ops import ArrayLike
from vano.core.rng import Purpose, RandomStream, rng_stream
from vano.core.tape import Node
from vano.data.dataset import Dataset
from vano.data.grid import uniform_grid
from vano.exceptions import ConfigError, DimensionError, InputError
from vano.model.latent import LatentGaussian
from vano.model.vano_model import VanoModel
from vano.schemas import ELBOConfig, LossReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Quadrature:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.points.shape[0] != self.weights.shape[0]:
            raise DimensionError(f"{self.points.shape[0]} quadrature points but {self.weights.shape[0]} weights")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def on_grid(cls, points: np.ndarray, measure: float, mode: str = "weighted") -> "Quadrature":
        points = np.asarray(points, dtype=np.float64)
        if mode not in ("weighted", "raw_sum"):
            raise ConfigError(f"unknown quadrature mode '{mode}'")
        m = points.shape[0]
        weights = np.full(m, measure / m) if mode == "weighted" else np.ones(m)
        return cls(points, weights)

    @classmethod
    def uniform(cls, extents: np.ndarray, counts: Sequence[int], mode: str = "weighted") -> "Quadrature":
        extents = np.asarray(extents, dtype=np.float64).reshape(-1, 2)
        measure = float(np.prod(extents[:, 1] - extents[:, 0]))
        return cls.on_grid(uniform_grid(extents, counts), measure, mode)

    @classmethod
    def for_dataset(cls, ds: Dataset, mode: str = "weighted") -> "Quadrature":
        return cls.on_grid(ds.grid, ds.domain_measure, mode)

    def norm_sq(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return np.sum(self.weights * values * values, axis=-1)

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.sum(self.weights * np.asarray(a) * np.asarray(b), axis=-1)


def _check_aligned(d: ArrayLike, u: ArrayLike, q: Quadrature) -> None:
    d_len, u_len = ops.value_of(d).shape[-1], ops.value_of(u).shape[-1]
    if d_len != q.size or u_len != q.size:
        raise DimensionError(f"values of length {d_len} and {u_len} on a {q.size}-point quadrature")


def reconstruction_term(d: ArrayLike, u: ArrayLike, q: Quadrature) -> Node:
    """1/2 ||d||_q^2 - <d, u>_q over the last axis; differentiable in d."""
    _check_aligned(d, u, q)
    integrand = ops.sub(ops.mul(0.5, ops.square(d)), ops.mul(d, u))
    return ops.total(ops.mul(integrand, q.weights), axis=-1)


def white_noise_loglik(d_vals: ArrayLike, u_vals: ArrayLike, q: Quadrature):
    out = -reconstruction_term(d_vals, u_vals, q).value
    return float(out) if out.ndim == 0 else out


def kl_terms(mu: ArrayLike, log_sigma: ArrayLike) -> Node:
    """Per-row KL[N(mu, sigma^2) || N(0, I)]."""
    two_log_sigma = ops.mul(2.0, log_sigma)
    inner = ops.sub(ops.add(ops.square(mu), ops.exp(two_log_sigma)), ops.add(two_log_sigma, 1.0))
    return ops.mul(0.5, ops.total(inner, axis=-1))


def kl_gaussian(post: LatentGaussian):
    out = kl_terms(post.mu, post.log_sigma).value
    return float(out) if out.ndim == 0 else out


def _norm_scales(values: np.ndarray, q: Quadrature, enabled: bool) -> np.ndarray:
    if not enabled:
        return np.ones(values.shape[0])
    norms = q.norm_sq(values)
    if np.any(norms <= 0.0):
        raise InputError("norm rescaling needs every function to have a positive norm")
    return 1.0 / norms


def elbo_terms(
        model: VanoModel,
        encoder_values: np.ndarray,
        values: np.ndarray,
        cfg: ELBOConfig,
        q: Quadrature,
        eps: np.ndarray,
) -> Tuple[Node, LossReport]:
    """Loss from pre-drawn noise ``eps`` of shape (B, S, n).

    ``encoder_values`` are the measurements the encoder reads; ``values`` are
    the same functions on the quadrature points used for reconstruction.
    """
    batch, samples, n = eps.shape
    if values.shape[0] != batch or encoder_values.shape[0] != batch:
        raise DimensionError(f"noise for {batch} examples, data for {values.shape[0]}")

    mu, log_sigma = model.encoder.forward(model.store, encoder_values)
    z = ops.add(
        ops.reshape(mu, (batch, 1, n)),
        ops.mul(ops.reshape(ops.exp(log_sigma), (batch, 1, n)), eps),
    )
    decoded = model.decoder.forward(model.store, ops.reshape(z, (batch * samples, n)), q.points)
    decoded = ops.reshape(decoded, (batch, samples, q.size))

    recon = ops.mean(reconstruction_term(decoded, values[:, None, :], q), axis=1)
    recon = ops.mul(recon, _norm_scales(values, q, cfg.norm_rescale))
    kl = kl_terms(mu, log_sigma)
    total = ops.mean(ops.add(recon, ops.mul(cfg.beta, kl)))

    report = LossReport(
        total=float(total.value),
        recon=float(np.mean(recon.value)),
        kl=float(np.mean(kl.value)),
        per_example=[(float(r), float(k)) for r, k in zip(recon.value, kl.value)],
    )
    return total, report


def elbo_loss(
        model: VanoModel,
        values: np.ndarray,
        cfg: ELBOConfig,
        q: Quadrature,
        stream: RandomStream,
        encoder_values: Optional[np.ndarray] = None,
) -> Tuple[Node, LossReport]:
    """Batch-mean loss; record it on a Tape to get parameter gradients.

    Noise is drawn example-major from ``stream`` as one (B, S, n) block.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ConfigError(f"elbo needs a non-empty (batch, m) block, got shape {values.shape}")
    if cfg.mc_samples < 1:
        raise ConfigError(f"mc_samples must be at least 1, got {cfg.mc_samples}")
    encoder_values = values if encoder_values is None else np.asarray(encoder_values, dtype=np.float64)
    eps = stream.normal((values.shape[0], cfg.mc_samples, model.config.latent_dim))
    return elbo_terms(model, encoder_values, values, cfg, q, eps)


def elbo_eval(
        model: VanoModel,
        dataset: Dataset,
        cfg: ELBOConfig,
        q: Optional[Quadrature] = None,
        seed: int = 0,
        encoder_input: Optional[Dataset] = None,
        batch_size: int = 256,
) -> LossReport:
    """Loss over a whole dataset without recording gradients.

    Batches are taken in file order and share one latent-noise stream, so a
    single batch reproduces ``elbo_loss`` with the same stream exactly.
    """
    q = q or Quadrature.for_dataset(dataset, cfg.quadrature_mode)
    if q.size != dataset.m:
        raise DimensionError(f"quadrature has {q.size} points, dataset has {dataset.m}")
    source = dataset if encoder_input is None else encoder_input
    if len(source) != len(dataset):
        raise DimensionError(f"encoder input holds {len(source)} functions, dataset holds {len(dataset)}")

    stream = rng_stream(seed, Purpose.LATENT_NOISE, 0)
    per_example = []
    for start in range(0, len(dataset), batch_size):
        stop = start + batch_size
        _, report = elbo_loss(
            model, dataset.values[start:stop], cfg, q, stream, encoder_values=source.values[start:stop]
        )
        per_example.extend(report.per_example)

    recon = np.array([r for r, _ in per_example])
    kl = np.array([k for _, k in per_example])
    total = float(np.mean(recon + cfg.beta * kl))
    logger.info(f"Eval: ELBO | N={len(dataset)} m={dataset.m} total={total:.6g} mode={cfg.quadrature_mode}")
    return LossReport(total=total, recon=float(np.mean(recon)), kl=float(np.mean(kl)), per_example=per_example)
