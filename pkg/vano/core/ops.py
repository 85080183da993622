"""Differentiable primitives over float64 numpy arrays."""
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf, expit

from vano.core.tape import Node, make_node
from vano.exceptions import ConfigError, DimensionError

ArrayLike = Union[Node, np.ndarray, float, int]

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def as_node(x: ArrayLike) -> Node:
    return x if isinstance(x, Node) else Node(x)


def value_of(x: ArrayLike) -> np.ndarray:
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=np.float64)


def add(a: ArrayLike, b: ArrayLike) -> Node:
    a, b = as_node(a), as_node(b)
    return make_node(a.value + b.value, (a, b), lambda g: (g, g), "add")


def sub(a: ArrayLike, b: ArrayLike) -> Node:
    a, b = as_node(a), as_node(b)
    return make_node(a.value - b.value, (a, b), lambda g: (g, -g), "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Node:
    a, b = as_node(a), as_node(b)
    av, bv = a.value, b.value
    return make_node(av * bv, (a, b), lambda g: (g * bv, g * av), "mul")


def neg(a: ArrayLike) -> Node:
    a = as_node(a)
    return make_node(-a.value, (a,), lambda g: (-g,), "neg")


def square(a: ArrayLike) -> Node:
    a = as_node(a)
    av = a.value
    return make_node(av * av, (a,), lambda g: (2.0 * g * av,), "square")


def exp(a: ArrayLike) -> Node:
    a = as_node(a)
    out = np.exp(a.value)
    return make_node(out, (a,), lambda g: (g * out,), "exp")


def clip(a: ArrayLike, lo: float, hi: float) -> Node:
    a = as_node(a)
    inside = (a.value >= lo) & (a.value <= hi)
    return make_node(np.clip(a.value, lo, hi), (a,), lambda g: (g * inside,), "clip")


def total(a: ArrayLike, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    shape = a.shape

    def grad_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return make_node(a.value.sum(axis=axis, keepdims=keepdims), (a,), grad_fn, "sum")


def mean(a: ArrayLike, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    count = a.value.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return mul(total(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a: ArrayLike, shape: Sequence[int]) -> Node:
    a = as_node(a)
    original = a.shape
    return make_node(a.value.reshape(shape), (a,), lambda g: (g.reshape(original),), "reshape")


def take(a: ArrayLike, index: slice, axis: int) -> Node:
    a = as_node(a)
    selector = [slice(None)] * a.value.ndim
    selector[axis] = index
    selector = tuple(selector)

    def grad_fn(g):
        full = np.zeros_like(a.value)
        full[selector] = g
        return (full,)

    return make_node(a.value[selector], (a,), grad_fn, "take")


def matmul_t(x: ArrayLike, w: ArrayLike) -> Node:
    """``x @ w.T`` for ``x`` of shape (..., in) and ``w`` of shape (out, in)."""
    x, w = as_node(x), as_node(w)
    xv, wv = x.value, w.value
    if wv.ndim != 2 or xv.shape[-1] != wv.shape[1]:
        raise DimensionError(f"cannot apply weight {wv.shape} to input {xv.shape}")

    def grad_fn(g):
        g2 = g.reshape(-1, g.shape[-1])
        x2 = xv.reshape(-1, xv.shape[-1])
        return g @ wv, g2.T @ x2

    return make_node(xv @ wv.T, (x, w), grad_fn, "matmul_t")


def matmul(a: ArrayLike, b: ArrayLike) -> Node:
    """Batched ``a @ b`` with numpy broadcasting over leading dimensions."""
    a, b = as_node(a), as_node(b)
    av, bv = a.value, b.value
    if av.shape[-1] != bv.shape[-2]:
        raise DimensionError(f"cannot multiply {av.shape} by {bv.shape}")

    def grad_fn(g):
        return g @ np.swapaxes(bv, -1, -2), np.swapaxes(av, -1, -2) @ g

    return make_node(av @ bv, (a, b), grad_fn, "matmul")


def gelu(a: ArrayLike) -> Node:
    a = as_node(a)
    x = a.value
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return make_node(x * cdf, (a,), lambda g: (g * (cdf + x * pdf),), "gelu")


def tanh(a: ArrayLike) -> Node:
    a = as_node(a)
    out = np.tanh(a.value)
    return make_node(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def softplus(a: ArrayLike) -> Node:
    a = as_node(a)
    x = a.value
    return make_node(np.logaddexp(0.0, x), (a,), lambda g: (g * expit(x),), "softplus")


def sigmoid(a: ArrayLike) -> Node:
    a = as_node(a)
    out = expit(a.value)
    return make_node(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def identity(a: ArrayLike) -> Node:
    return as_node(a)


ACTIVATIONS = {
    "identity": identity,
    "gelu": gelu,
    "tanh": tanh,
    "softplus": softplus,
    "sigmoid": sigmoid,
}


def activate(a: ArrayLike, activation: str) -> Node:
    try:
        fn = ACTIVATIONS[activation]
    except KeyError:
        raise ConfigError(f"unknown activation '{activation}'") from None
    return fn(a)
