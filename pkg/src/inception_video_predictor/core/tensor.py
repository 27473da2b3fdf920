"""Dense 4-D tensors with reverse-mode differentiation.

Every value flowing through the models is a ``Tensor`` of shape
``(batch, channels, rows, cols)``. Operations in :mod:`.ops` build a graph of
``Node`` records whenever one of their inputs requires a gradient; calling
:func:`backward` on a scalar loss replays that graph in reverse through a
:class:`Tape` and accumulates ``d loss / d leaf`` into each leaf's ``grad``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ContractError, ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence, float, int]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass(frozen=True)
class Node:
    """Record of one executed operation."""
    op: str
    inputs: Tuple["Tensor", ...]
    backward: BackwardFn


class Tensor:
    """A dense 4-D array with an optional gradient accumulator."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[Union[str, np.dtype]] = None,
    ):
        array = np.array(data, dtype=dtype, copy=True)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)
        self._init(array, requires_grad, None)

    def _init(self, array: np.ndarray, requires_grad: bool, node: Optional[Node]) -> None:
        if array.ndim != 4:
            raise ShapeError(
                "Tensor data must be 4-D (batch, channels, rows, cols)",
                expected="4 dimensions",
                actual=array.shape,
            )
        if min(array.shape) < 1:
            raise ShapeError("Tensor dimensions must all be at least 1", actual=array.shape)
        self.data = array
        self.requires_grad = requires_grad
        self._node = node
        self.grad: Optional[np.ndarray] = (
            np.zeros_like(array) if requires_grad and node is None else None
        )

    @classmethod
    def _from_op(cls, array: np.ndarray, node: Optional[Node]) -> "Tensor":
        tensor = cls.__new__(cls)
        tensor._init(array, node is not None, node)
        return tensor

    @classmethod
    def wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Adopt ``array`` without copying it."""
        tensor = cls.__new__(cls)
        tensor._init(array, requires_grad, None)
        return tensor

    @classmethod
    def zeros(cls, shape: Tuple[int, int, int, int], dtype: str = "float64",
              requires_grad: bool = False) -> "Tensor":
        return cls.wrap(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @classmethod
    def ones(cls, shape: Tuple[int, int, int, int], dtype: str = "float64",
             requires_grad: bool = False) -> "Tensor":
        return cls.wrap(np.ones(shape, dtype=dtype), requires_grad=requires_grad)

    @classmethod
    def scalar(cls, value: float, dtype: str = "float64", requires_grad: bool = False) -> "Tensor":
        return cls.wrap(np.full((1, 1, 1, 1), value, dtype=dtype), requires_grad=requires_grad)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    @property
    def node(self) -> Optional[Node]:
        return self._node

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Same values, no graph, no gradient."""
        return Tensor.wrap(self.data)

    def astype(self, dtype: Union[str, np.dtype]) -> "Tensor":
        """Detached copy converted to ``dtype``; a no-op view when it already matches."""
        if self.data.dtype == np.dtype(dtype):
            return self if self.is_leaf and not self.requires_grad else self.detach()
        return Tensor.wrap(self.data.astype(dtype))

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        op = f", op={self._node.op}" if self._node is not None else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag}{op})"


def make_result(array: np.ndarray, inputs: Iterable[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op output, recording a graph node only when some input needs a gradient."""
    inputs = tuple(inputs)
    node = Node(op, inputs, backward_fn) if any(t.requires_grad for t in inputs) else None
    return Tensor._from_op(array, node)


class Tape:
    """Ordered record of the operations that produced a loss.

    ``entries`` lists op outputs so that every tensor appears after all of its
    inputs; replaying in reverse visits each node once, after its consumers.
    """

    def __init__(self, entries: List[Tensor]):
        self.entries = entries

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        entries: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                entries.append(tensor)
                continue
            if id(tensor) in visited or tensor.node is None:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            for parent in tensor.node.inputs:
                if parent.node is not None and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def replay(self, root: Tensor, seed: np.ndarray) -> None:
        """Propagate ``seed`` (d loss / d root) back to every leaf."""
        if root.is_leaf:
            if root.grad is not None:
                root.grad += seed
            return

        pending: Dict[int, np.ndarray] = {id(root): seed}
        for tensor in reversed(self.entries):
            grad_out = pending.pop(id(tensor), None)
            if grad_out is None:
                continue
            node = tensor.node
            input_grads = node.backward(grad_out)
            for parent, grad_in in zip(node.inputs, input_grads):
                if grad_in is None or not parent.requires_grad:
                    continue
                if parent.is_leaf:
                    parent.grad += grad_in
                elif id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + grad_in
                else:
                    pending[id(parent)] = grad_in


def backward(loss: Tensor) -> None:
    """Accumulate d loss / d leaf into every leaf that requires a gradient.

    Gradients add to whatever is already in ``grad``; callers zero them
    between optimisation steps.
    """
    if loss.size != 1:
        raise ContractError(
            f"backward() needs a scalar loss, got shape {loss.shape}",
            error_code="NON_SCALAR_LOSS",
        )
    if not loss.requires_grad:
        raise ContractError("backward() called on a loss that does not depend on any parameter")

    tape = Tape.record(loss)
    logger.debug("Replaying tape with %d nodes", len(tape))
    tape.replay(loss, np.ones_like(loss.data))
