from typing import Dict, Iterator, List, NamedTuple, Tuple

import numpy as np

from vano.core.tape import Node, active_tape
from vano.exceptions import ContractError, DimensionError


class TensorSlot(NamedTuple):
    name: str
    shape: Tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


class ParamStore:
    """All trainable tensors packed into one flat float64 array.

    ``layout`` maps names to disjoint, contiguous slices of ``values``;
    ``grads`` mirrors ``values`` slot for slot.
    """

    def __init__(self):
        self.values = np.zeros(0, dtype=np.float64)
        self.grads = np.zeros(0, dtype=np.float64)
        self.layout: List[TensorSlot] = []
        self._index: Dict[str, int] = {}

    def declare(self, name: str, value: np.ndarray) -> None:
        if name in self._index:
            raise ContractError(f"tensor '{name}' already declared")
        value = np.asarray(value, dtype=np.float64)
        slot = TensorSlot(name, tuple(int(n) for n in value.shape), self.values.size)
        self.values = np.concatenate([self.values, value.ravel()])
        self.grads = np.zeros_like(self.values)
        self._index[name] = len(self.layout)
        self.layout.append(slot)

    def slot(self, name: str) -> TensorSlot:
        try:
            return self.layout[self._index[name]]
        except KeyError:
            raise DimensionError(f"unknown tensor '{name}'") from None

    def view(self, name: str) -> np.ndarray:
        slot = self.slot(name)
        return self.values[slot.offset:slot.offset + slot.size].reshape(slot.shape)

    def grad_view(self, name: str) -> np.ndarray:
        slot = self.slot(name)
        return self.grads[slot.offset:slot.offset + slot.size].reshape(slot.shape)

    def assign(self, name: str, value: np.ndarray) -> None:
        target = self.view(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != target.shape:
            raise DimensionError(f"tensor '{name}' has shape {target.shape}, got {value.shape}")
        target[...] = value

    def node(self, name: str) -> Node:
        leaf = Node(self.view(name), op="param", param=(self, name))
        tape = active_tape()
        if tape is not None:
            tape.record(leaf)
        return leaf

    def zero_grad(self) -> None:
        self.grads[...] = 0.0

    def names(self) -> List[str]:
        return [slot.name for slot in self.layout]

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        for slot in self.layout:
            yield slot.name, self.view(slot.name)

    def copy(self) -> "ParamStore":
        clone = ParamStore()
        clone.values = self.values.copy()
        clone.grads = self.grads.copy()
        clone.layout = list(self.layout)
        clone._index = dict(self._index)
        return clone

    def validate(self) -> None:
        cursor = 0
        for slot in self.layout:
            if slot.offset != cursor:
                raise ContractError(f"tensor '{slot.name}' starts at {slot.offset}, expected {cursor}")
            cursor += slot.size
        if cursor != self.values.size or self.grads.size != self.values.size:
            raise ContractError("layout does not cover the parameter array")

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return self.values.size
