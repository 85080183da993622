from typing import Any, Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from vano.constants import Activation, QuadratureMode
from vano.settings import settings


class PeriodicEncodingSpec(BaseModel):
    kind: Literal["periodic"] = "periodic"
    harmonics: int = Field(32, ge=0, description="Harmonic count k")
    length: float = Field(1.0, gt=0, description="Domain length L")
    sine_only: bool = Field(False, description="Keep only the sine harmonics (vanish at 0 and L)")


class RFFEncodingSpec(BaseModel):
    kind: Literal["rff"] = "rff"
    features: int = Field(..., ge=1, description="Feature count q")
    variance: float = Field(10.0, gt=0, description="Sampling variance sigma^2 of B")


class NoEncodingSpec(BaseModel):
    kind: Literal["none"] = "none"


AnyEncodingSpec = Annotated[
    Union[
        PeriodicEncodingSpec,
        RFFEncodingSpec,
        NoEncodingSpec,
    ],
    Field(discriminator="kind")
]


class EncoderSpec(BaseModel):
    input_dim: int = Field(..., ge=1)
    hidden: List[int] = Field(default_factory=lambda: [128, 128, 128])
    latent_dim: int = Field(..., ge=1)
    activation: Activation = "gelu"


DecoderKind = Literal["linear", "concat", "split_concat"]


class DecoderSpec(BaseModel):
    kind: DecoderKind
    encoding: AnyEncodingSpec = Field(default_factory=NoEncodingSpec)
    hidden: List[int] = Field(default_factory=lambda: [128, 128, 128])
    latent_dim: int = Field(..., ge=1)
    activation: Activation = "gelu"
    output_activation: Literal["identity", "softplus", "sigmoid"] = "identity"
    bias: bool = True

    @model_validator(mode="after")
    def _check_split(self) -> "DecoderSpec":
        if self.kind == "split_concat":
            if not self.hidden:
                raise ValueError("split_concat decoder needs at least one hidden layer")
            if self.latent_dim < len(self.hidden):
                raise ValueError(
                    f"split_concat decoder cannot split n={self.latent_dim} into {len(self.hidden)} chunks"
                )
        return self


class ELBOConfig(BaseModel):
    beta: float = Field(0.0, ge=0)
    mc_samples: int = Field(1, ge=1)
    norm_rescale: bool = False
    quadrature_mode: QuadratureMode = "weighted"


class GRFParams(BaseModel):
    alpha: float = Field(2.0, gt=0.5)
    tau: float = Field(3.0, ge=0)
    n_eig: int = Field(32, ge=1)
    m: int = Field(128, ge=2)
    n: int = Field(2048, ge=1, description="Sample count N")


class BumpsParams(BaseModel):
    n: int = Field(2048, ge=1, description="Sample count N")
    side: int = Field(48, ge=2)
    sigma_max: float = Field(0.1, ge=0, description="sigma ~ U(0, sigma_max) + sigma_offset")
    sigma_offset: float = Field(0.01, gt=0)
    standard_normalization: bool = False


class KernelFamily(BaseModel):
    sigma_min: float = Field(0.1, gt=0)
    sigma_max: float = Field(20.0, gt=0)
    grid_size: int = Field(64, ge=2)

    @model_validator(mode="after")
    def _check_range(self) -> "KernelFamily":
        if self.sigma_min >= self.sigma_max:
            raise ValueError("sigma_min must be below sigma_max")
        return self

    def sigmas(self) -> np.ndarray:
        grid = np.geomspace(self.sigma_min, self.sigma_max, self.grid_size)
        grid[0], grid[-1] = self.sigma_min, self.sigma_max
        return grid


class Provenance(BaseModel):
    generator: str
    seed: int
    params: Dict[str, Any] = Field(default_factory=dict)


class LossReport(BaseModel):
    total: float
    recon: float
    kl: float
    per_example: List[Tuple[float, float]] = Field(default_factory=list)


class CircularStats(BaseModel):
    variance: float
    skewness: Optional[float] = Field(None, description="None when all angles coincide (R1 = 1)")


class TrainLogRow(BaseModel):
    step: int
    total: float
    recon: float
    kl: float
    effective_lr: float
    wall_ms: float


class MetricRow(BaseModel):
    metric_name: str
    value: float
    aux: str = "n/a"
    dataset_a: str = "n/a"
    dataset_b: str = "n/a"
    seed: str = "n/a"


Experiment = Literal["grf", "bumps", "custom"]


class TrainConfig(BaseModel):
    experiment: Experiment = "custom"
    latent_dim: int = Field(64, ge=1)
    beta: float = Field(5e-6, ge=0)
    mc_samples: int = Field(16, ge=1)

    decoder: DecoderKind = "linear"
    encoding: Literal["periodic", "rff", "none"] = "periodic"
    harmonics: int = Field(32, ge=0)
    sine_only: bool = False
    domain_length: float = Field(1.0, gt=0)
    rff_features: int = Field(0, ge=0, description="0 means latent_dim // 2")
    rff_variance: float = Field(10.0, gt=0)

    encoder_hidden: List[int] = Field(default_factory=lambda: [128, 128, 128])
    decoder_hidden: List[int] = Field(default_factory=lambda: [128, 128, 128])
    activation: Activation = "gelu"
    output_activation: Literal["identity", "softplus", "sigmoid"] = "identity"
    decoder_bias: bool = True

    batch_size: int = Field(32, ge=1)
    iterations: int = Field(40000, ge=1)
    base_lr: float = Field(1e-3, gt=0)
    decay_rate: float = Field(0.9, gt=0, le=1)
    decay_every: int = Field(1000, ge=1)
    checkpoint_every: int = Field(default_factory=lambda: settings.VANO_CHECKPOINT_EVERY, ge=1)

    data_seed: int = Field(0, ge=0)
    init_seed: int = Field(0, ge=0)
    noise_seed: int = Field(0, ge=0)

    norm_rescale: bool = True
    quadrature_mode: QuadratureMode = "weighted"
    rwf: bool = True
    rwf_mean: float = 0.5
    rwf_std: float = Field(0.1, ge=0)

    @field_validator("encoder_hidden", "decoder_hidden", mode="before")
    @classmethod
    def _split_widths(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.split(",") if part.strip()]
        return value

    @classmethod
    def from_preset(cls, experiment: Experiment, /, **overrides) -> "TrainConfig":
        return cls(**{**PRESETS[experiment], **overrides})

    def encoder_spec(self, input_dim: int) -> EncoderSpec:
        return EncoderSpec(
            input_dim=input_dim,
            hidden=self.encoder_hidden,
            latent_dim=self.latent_dim,
            activation=self.activation,
        )

    def encoding_spec(self) -> AnyEncodingSpec:
        if self.encoding == "periodic":
            return PeriodicEncodingSpec(harmonics=self.harmonics, length=self.domain_length, sine_only=self.sine_only)
        if self.encoding == "rff":
            return RFFEncodingSpec(
                features=self.rff_features or max(1, self.latent_dim // 2),
                variance=self.rff_variance,
            )
        return NoEncodingSpec()

    def decoder_spec(self) -> DecoderSpec:
        return DecoderSpec(
            kind=self.decoder,
            encoding=self.encoding_spec(),
            hidden=self.decoder_hidden,
            latent_dim=self.latent_dim,
            activation=self.activation,
            output_activation=self.output_activation,
            bias=self.decoder_bias,
        )

    def elbo_config(self) -> ELBOConfig:
        return ELBOConfig(
            beta=self.beta,
            mc_samples=self.mc_samples,
            norm_rescale=self.norm_rescale,
            quadrature_mode=self.quadrature_mode,
        )


PRESETS: Dict[str, Dict[str, Any]] = {
    "grf": {
        "experiment": "grf",
        "latent_dim": 64,
        "beta": 5e-6,
        "mc_samples": 16,
        "decoder": "linear",
        "encoding": "periodic",
        "harmonics": 32,
        "sine_only": True,
        "decoder_bias": False,
        "output_activation": "identity",
        "batch_size": 32,
        "iterations": 40000,
        "norm_rescale": True,
    },
    "bumps": {
        "experiment": "bumps",
        "latent_dim": 32,
        "beta": 1e-5,
        "mc_samples": 4,
        "decoder": "concat",
        "encoding": "rff",
        "rff_variance": 10.0,
        "output_activation": "softplus",
        "batch_size": 32,
        "iterations": 20000,
        "norm_rescale": True,
    },
    "custom": {
        "experiment": "custom",
        "norm_rescale": False,
    },
}
