"""Positional encodings gamma(x) for query coordinates.

All encodings take coordinates of shape (P, d) and return features of shape
(P, F). They are constants of the computation: nothing here is trained.
"""
from typing import Union

import numpy as np

from vano.core.rng import Purpose, rng_stream
from vano.exceptions import ConfigError, DimensionError
from vano.schemas import AnyEncodingSpec


def _as_points(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1 and dim == 1:
        x = x[:, None]
    elif x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"expected coordinates with {dim} component(s), got shape {x.shape}")
    return x


class PeriodicEncoding:
    """[1, cos(wx), sin(wx), ..., cos(kwx), sin(kwx)] with w = 2 pi / L.

    Coordinates are reduced modulo L first, so gamma(0) and gamma(L) agree
    exactly. With ``sine_only`` the constant and cosine terms are dropped and
    every feature is exactly zero at x = 0 and x = L.
    """

    kind = "periodic"
    dim = 1

    def __init__(self, harmonics: int, length: float = 1.0, sine_only: bool = False):
        if harmonics < 0:
            raise ConfigError(f"harmonic count must be non-negative, got {harmonics}")
        if length <= 0:
            raise ConfigError(f"domain length must be positive, got {length}")
        self.harmonics = int(harmonics)
        self.length = float(length)
        self.sine_only = bool(sine_only)
        self.omega = 2.0 * np.pi / self.length

    @property
    def output_dim(self) -> int:
        return self.harmonics if self.sine_only else 2 * self.harmonics + 1

    def encode(self, xs: np.ndarray) -> np.ndarray:
        x = np.mod(_as_points(xs, 1)[:, 0], self.length)
        phase = self.omega * x[:, None] * np.arange(1, self.harmonics + 1)[None, :]
        if self.sine_only:
            return np.sin(phase)
        features = np.empty((x.shape[0], self.output_dim))
        features[:, 0] = 1.0
        features[:, 1::2] = np.cos(phase)
        features[:, 2::2] = np.sin(phase)
        return features

    def buffers(self) -> dict:
        return {
            "encoding.harmonics": np.asarray(float(self.harmonics)),
            "encoding.length": np.asarray(self.length),
            "encoding.sine_only": np.asarray(float(self.sine_only)),
        }


class RFFEncoding:
    """[cos(2 pi B x), sin(2 pi B x)] with a frozen B of shape (q, d)."""

    kind = "rff"

    def __init__(self, B: np.ndarray, sigma: float):
        B = np.array(B, dtype=np.float64)
        if B.ndim != 2:
            raise DimensionError(f"RFF matrix must be 2-D, got shape {B.shape}")
        self.B = B
        self.B.setflags(write=False)
        self.sigma = float(sigma)

    @property
    def q(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    @property
    def output_dim(self) -> int:
        return 2 * self.q

    def encode(self, xs: np.ndarray) -> np.ndarray:
        proj = 2.0 * np.pi * (_as_points(xs, self.dim) @ self.B.T)
        return np.concatenate([np.cos(proj), np.sin(proj)], axis=1)

    def buffers(self) -> dict:
        return {"encoding.B": self.B, "encoding.sigma": np.asarray(self.sigma)}


class IdentityEncoding:
    kind = "none"

    def __init__(self, dim: int):
        self.dim = int(dim)

    @property
    def output_dim(self) -> int:
        return self.dim

    def encode(self, xs: np.ndarray) -> np.ndarray:
        return _as_points(xs, self.dim).copy()

    def buffers(self) -> dict:
        return {}


Encoding = Union[PeriodicEncoding, RFFEncoding, IdentityEncoding]


def periodic_encode(enc: PeriodicEncoding, x) -> np.ndarray:
    return enc.encode(np.atleast_1d(np.asarray(x, dtype=np.float64)))[0]


def rff_encode(enc: RFFEncoding, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (enc.dim,):
        raise DimensionError(f"RFF encoding expects a point of dimension {enc.dim}, got shape {x.shape}")
    return enc.encode(x[None, :])[0]


def build_rff(seed: int, q: int, d: int, sigma: float) -> RFFEncoding:
    if q < 1 or d < 1:
        raise ConfigError(f"RFF needs q >= 1 and d >= 1, got q={q}, d={d}")
    if not sigma > 0:
        raise ConfigError(f"RFF sigma must be positive, got {sigma}")
    B = sigma * rng_stream(seed, Purpose.RFF_MATRIX, 0).normal((q, d))
    return RFFEncoding(B, sigma)


def build_encoding(spec: AnyEncodingSpec, dim: int, seed: int) -> Encoding:
    if spec.kind == "periodic":
        if dim != 1:
            raise DimensionError(f"periodic encoding is defined for 1-D domains, got d={dim}")
        return PeriodicEncoding(spec.harmonics, spec.length, spec.sine_only)
    if spec.kind == "rff":
        return build_rff(seed, spec.features, dim, float(np.sqrt(spec.variance)))
    return IdentityEncoding(dim)


def encoding_from_buffers(spec: AnyEncodingSpec, dim: int, buffers: dict) -> Encoding:
    if spec.kind == "rff":
        return RFFEncoding(buffers["encoding.B"], float(buffers["encoding.sigma"]))
    return build_encoding(spec, dim, seed=0)
