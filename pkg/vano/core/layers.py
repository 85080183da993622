from typing import List, Sequence, Union

import numpy as np

from vano.core import ops
from vano.core.params import ParamStore
from vano.core.rng import RandomStream
from vano.core.tape import Node
from vano.exceptions import DimensionError

RWF_SCALE = ".scale"
RWF_DIRECTION = ".dir"


def glorot_uniform(stream: RandomStream, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (2.0 * stream.uniform((fan_out, fan_in)) - 1.0) * limit


def init_dense(
        store: ParamStore,
        name: str,
        in_dim: int,
        out_dim: int,
        stream: RandomStream,
        bias: bool = True,
) -> None:
    store.declare(f"{name}.w", glorot_uniform(stream, in_dim, out_dim))
    if bias:
        store.declare(f"{name}.b", np.zeros(out_dim))


def init_mlp(
        store: ParamStore,
        prefix: str,
        widths: Sequence[int],
        stream: RandomStream,
        bias: bool = True,
) -> None:
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        init_dense(store, f"{prefix}.{i}", fan_in, fan_out, stream, bias=bias)


def dense_weight(store: ParamStore, name: str) -> Node:
    weight = f"{name}.w"
    if weight + RWF_SCALE in store:
        scale = store.node(weight + RWF_SCALE)
        direction = store.node(weight + RWF_DIRECTION)
        return ops.mul(ops.reshape(ops.exp(scale), (-1, 1)), direction)
    return store.node(weight)


def forward_dense(
        store: ParamStore,
        name: str,
        inputs: Union[Node, np.ndarray, Sequence[Union[Node, np.ndarray]]],
        activation: str = "identity",
) -> Node:
    """activation(W x + b) over the last axis of ``inputs``.

    A list of inputs is treated as their concatenation along the last axis;
    the parts may broadcast against each other over the leading axes, which
    lets a latent code of shape (B, 1, n) meet query features of shape
    (1, P, F) without materialising the (B, P, n + F) block.
    """
    parts: List[Node] = [ops.as_node(p) for p in (inputs if isinstance(inputs, (list, tuple)) else [inputs])]
    weight = dense_weight(store, name)
    out_dim, in_dim = weight.shape
    widths = [p.shape[-1] for p in parts]
    if sum(widths) != in_dim:
        raise DimensionError(f"layer '{name}' expects {in_dim} inputs, got {sum(widths)}")

    if len(parts) == 1:
        out = ops.matmul_t(parts[0], weight)
    else:
        out = None
        start = 0
        for part, width in zip(parts, widths):
            block = ops.take(weight, slice(start, start + width), axis=1)
            partial = ops.matmul_t(part, block)
            out = partial if out is None else ops.add(out, partial)
            start += width

    if f"{name}.b" in store:
        bias = store.node(f"{name}.b")
        if bias.shape != (out_dim,):
            raise DimensionError(f"layer '{name}' bias has shape {bias.shape}, expected ({out_dim},)")
        out = ops.add(out, bias)
    return ops.activate(out, activation)


def forward_mlp(
        store: ParamStore,
        prefix: str,
        x: Union[Node, np.ndarray],
        depth: int,
        activation: str,
        output_activation: str = "identity",
) -> Node:
    h = ops.as_node(x)
    for i in range(depth):
        last = i == depth - 1
        h = forward_dense(store, f"{prefix}.{i}", h, output_activation if last else activation)
    return h


def rwf_reparameterize(
        store: ParamStore,
        enabled: bool,
        stream: RandomStream,
        init_mean: float = 0.5,
        init_std: float = 0.1,
) -> ParamStore:
    """Random weight factorization: W = exp(s) * V with one scale per output row.

    The direction is initialised as W / exp(s) so the factorised network
    starts from the same function as the plain one.
    """
    if not enabled:
        return store
    factored = ParamStore()
    for name, value in store.items():
        if name.endswith(".w") and value.ndim == 2:
            scale = init_mean + init_std * stream.normal(value.shape[0])
            factored.declare(name + RWF_SCALE, scale)
            factored.declare(name + RWF_DIRECTION, value / np.exp(scale)[:, None])
        else:
            factored.declare(name, value.copy())
    return factored
