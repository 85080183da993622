"""Reverse-mode recording.

Every primitive in :mod:`vano.core.ops` returns a :class:`Node`. While a
:class:`Tape` is active (``with Tape() as tape:``) the node is appended to it
together with a closure mapping the output cotangent to input cotangents.
Outside a tape, nodes carry values only.
"""
from contextvars import ContextVar
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from vano.exceptions import ContractError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_tape: ContextVar[Optional["Tape"]] = ContextVar("vano_active_tape", default=None)


class Node:
    __slots__ = ("id", "value", "parents", "backward_fn", "grad", "param", "op")

    def __init__(
            self,
            value,
            parents: Tuple["Node", ...] = (),
            backward_fn: Optional[BackwardFn] = None,
            op: str = "const",
            param: Optional[Tuple[object, str]] = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.param = param
        self.grad: Optional[np.ndarray] = None
        self.id = -1

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(id={self.id}, op={self.op}, shape={self.shape})"


class Tape:

    def __init__(self):
        self.records: List[Node] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_tape.reset(self._token)
        self._token = None

    def record(self, node: Node) -> Node:
        node.id = len(self.records)
        self.records.append(node)
        return node

    def __len__(self) -> int:
        return len(self.records)


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


def make_node(value, parents: Tuple[Node, ...], backward_fn: BackwardFn, op: str) -> Node:
    tape = _active_tape.get()
    if tape is None:
        return Node(value, op=op)
    node = Node(value, parents, backward_fn, op=op)
    return tape.record(node)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def backward(tape: Tape, loss_node: Node) -> None:
    """Propagate d(loss)/d(node) through ``tape`` and accumulate parameter grads.

    Parameter leaves add their cotangent into ``store.grads``; callers zero the
    store first, so parameters not reached by the loss keep a gradient of 0.
    """
    if loss_node.value.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss_node.shape}")
    if loss_node.id < 0 or loss_node.id >= len(tape.records) or tape.records[loss_node.id] is not loss_node:
        raise ContractError("loss node was not recorded on this tape")

    for node in tape.records:
        node.grad = None
    loss_node.grad = np.ones_like(loss_node.value)

    for node in reversed(tape.records[:loss_node.id + 1]):
        if node.grad is None:
            continue
        if node.param is not None:
            store, name = node.param
            store.grad_view(name)[...] += node.grad
            continue
        if node.backward_fn is None:
            continue
        parent_grads = node.backward_fn(node.grad)
        for parent, grad in zip(node.parents, parent_grads):
            if grad is None or parent.id < 0:
                continue
            grad = unbroadcast(np.asarray(grad, dtype=np.float64), parent.shape)
            parent.grad = grad if parent.grad is None else parent.grad + grad
