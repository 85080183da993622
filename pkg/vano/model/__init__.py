from vano.model.decoders import ConcatDecoder, Decoder, LinearDecoder, SplitConcatDecoder, build_decoder, split_sizes
from vano.model.encoder import Encoder
from vano.model.latent import LatentGaussian, Prior, sample_latent
from vano.model.vano_model import VanoModel

__all__ = [
    "ConcatDecoder",
    "Decoder",
    "Encoder",
    "LatentGaussian",
    "LinearDecoder",
    "Prior",
    "SplitConcatDecoder",
    "VanoModel",
    "build_decoder",
    "sample_latent",
    "split_sizes",
]
