from vano.core.layers import forward_dense, forward_mlp, init_dense, init_mlp, rwf_reparameterize
from vano.core.optim import AdamState, adam_step, effective_lr
from vano.core.params import ParamStore
from vano.core.rng import Purpose, RandomStream, rng_stream
from vano.core.tape import Node, Tape, backward

__all__ = [
    "AdamState",
    "Node",
    "ParamStore",
    "Purpose",
    "RandomStream",
    "Tape",
    "adam_step",
    "backward",
    "effective_lr",
    "forward_dense",
    "forward_mlp",
    "init_dense",
    "init_mlp",
    "rng_stream",
    "rwf_reparameterize",
]
