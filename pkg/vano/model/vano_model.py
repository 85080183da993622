import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from vano.core.checkpoint import load_checkpoint, save_checkpoint
from vano.core.layers import rwf_reparameterize
from vano.core.optim import AdamState
from vano.core.params import ParamStore
from vano.core.rng import Purpose, rng_stream
from vano.data.grid import uniform_grid
from vano.encodings import Encoding, build_encoding, encoding_from_buffers
from vano.exceptions import DatasetFormatError
from vano.model.decoders import Decoder, build_decoder
from vano.model.encoder import Encoder
from vano.model.latent import LatentGaussian, Prior
from vano.schemas import TrainConfig
from vano.settings import settings

logger = logging.getLogger(__name__)


class VanoModel:
    """Encoder, decoder and their parameters for one domain.

    ``extents`` is a (d, 2) array of per-axis (min, max); ``input_counts``
    holds the per-axis point counts of the grid the encoder reads.
    """

    def __init__(
            self,
            config: TrainConfig,
            extents: np.ndarray,
            input_counts: Sequence[int],
            encoding: Encoding,
            store: ParamStore,
    ):
        self.config = config
        self.extents = np.asarray(extents, dtype=np.float64).reshape(-1, 2)
        self.input_counts = [int(c) for c in input_counts]
        self.encoding = encoding
        self.encoder = Encoder(config.encoder_spec(int(np.prod(self.input_counts))))
        self.decoder: Decoder = build_decoder(config.decoder_spec(), encoding)
        self.prior = Prior(config.latent_dim)
        self.store = store

    @property
    def domain_dim(self) -> int:
        return self.extents.shape[0]

    @property
    def input_grid(self) -> np.ndarray:
        return uniform_grid(self.extents, self.input_counts)

    @classmethod
    def build(cls, config: TrainConfig, extents: np.ndarray, input_counts: Sequence[int]) -> "VanoModel":
        extents = np.asarray(extents, dtype=np.float64).reshape(-1, 2)
        encoding = build_encoding(config.encoding_spec(), extents.shape[0], seed=config.init_seed)
        model = cls(config, extents, input_counts, encoding, ParamStore())

        init = rng_stream(config.init_seed, Purpose.INIT, 0)
        model.encoder.init_params(model.store, init)
        model.decoder.init_params(model.store, init)
        model.store = rwf_reparameterize(
            model.store,
            config.rwf,
            rng_stream(config.init_seed, Purpose.INIT, 1),
            init_mean=config.rwf_mean,
            init_std=config.rwf_std,
        )
        model.store.validate()
        logger.info(
            f"Model: {config.decoder} decoder, n={config.latent_dim}, "
            f"{len(model.store)} parameters ({len(model.store.layout)} tensors), rwf={config.rwf}"
        )
        return model

    def encode(self, u_values: np.ndarray) -> LatentGaussian:
        return self.encoder.encode(self.store, u_values)

    def decode_field(self, z: np.ndarray, xs: np.ndarray) -> np.ndarray:
        return self.decoder.decode_field(self.store, z, xs)

    def grid(self, resolution: Union[int, Sequence[int]]) -> np.ndarray:
        counts = [resolution] * self.domain_dim if isinstance(resolution, (int, np.integer)) else list(resolution)
        return uniform_grid(self.extents, counts)

    def metadata(self) -> Dict[str, Any]:
        return {
            "config": self.config.model_dump(),
            "domain": {"extents": self.extents.tolist(), "input_counts": self.input_counts},
            "version": settings.APP_VERSION,
        }

    def save(self, path: Union[str, Path], adam: Optional[AdamState] = None, extra: Optional[dict] = None) -> Path:
        meta = self.metadata()
        if extra:
            meta.update(extra)
        return save_checkpoint(path, self.store, buffers=self.encoding.buffers(), adam=adam, meta=meta)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "VanoModel":
        model, _ = cls.load_with_state(path)
        return model

    @classmethod
    def load_with_state(cls, path: Union[str, Path]):
        checkpoint = load_checkpoint(path)
        try:
            config = TrainConfig.model_validate(checkpoint.meta["config"])
            domain = checkpoint.meta["domain"]
            extents = np.asarray(domain["extents"], dtype=np.float64).reshape(-1, 2)
            input_counts = [int(c) for c in domain["input_counts"]]
            encoding = encoding_from_buffers(config.encoding_spec(), extents.shape[0], checkpoint.buffers)
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetFormatError(f"{path}: checkpoint metadata is incomplete ({e})") from e
        model = cls(config, extents, input_counts, encoding, checkpoint.params)
        model.store.validate()
        return model, checkpoint.adam
