"""
Reverse-mode automatic differentiation over dense numpy tensors.
Tensors record the primitive that produced them; backward() walks the graph in reverse topological order.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ContractViolation

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """A node of the computation graph.

    Leaves hold data only. Interior nodes also keep their parents and a closure
    mapping the output gradient to one gradient per parent.
    """

    __array_priority__ = 100.0

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
        op: str = "leaf",
    ):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        if array.ndim > 3:
            raise ContractViolation(f"tensors are limited to rank 3, got shape {array.shape}")
        self.data = array
        self.requires_grad = requires_grad
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self._grad: Optional[np.ndarray] = None

    # Identity semantics: tensors are graph nodes and usable as dict keys.
    __hash__ = object.__hash__

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self.backward_fn is None

    @property
    def grad(self) -> np.ndarray:
        """Accumulated gradient; zeros when the tensor never received one."""
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    def zero_grad(self) -> None:
        self._grad = None

    def accumulate(self, grad: np.ndarray) -> None:
        if self._grad is None:
            self._grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self._grad = self._grad + grad

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # Operator sugar; primitives live in ops.py
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.subtract(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.subtract(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.divide(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.divide(other, self)

    def __neg__(self):
        from . import ops
        return ops.multiply(self, -1.0)

    def __pow__(self, exponent: float):
        from . import ops
        return ops.power(self, exponent)


class Parameter(Tensor):
    """Trainable leaf tensor."""

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(value, dtype=None) -> Tensor:
    """Wrap constants (python scalars, numpy arrays) as non-differentiable leaves."""
    if isinstance(value, Tensor):
        return value
    array = np.asarray(value, dtype=dtype if dtype is not None else np.float64)
    return Tensor(array)


def make_node(
    data: np.ndarray,
    parents: Tuple[Tensor, ...],
    backward_fn: BackwardFn,
    op: str,
) -> Tensor:
    """Create an interior node; parents are only recorded when a gradient can flow."""
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)
    return Tensor(data, op=op)


@dataclass
class Graph:
    """Topologically ordered record of the primitive applications behind a root."""

    nodes: List[Tensor] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> "Graph":
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(nodes=order)

    def leaves(self) -> List[Tensor]:
        return [n for n in self.nodes if n.is_leaf and n.requires_grad]

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """Back-propagate from a scalar loss.

    Leaf gradients accumulate into ``Tensor.grad`` (a second call without
    ``zero_grad`` doubles them). Returns the accumulated gradient of every leaf
    reached.

    Raises:
        ContractViolation: if ``loss`` is not a single element.
    """
    if loss.data.size != 1:
        raise ContractViolation(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return {}

    graph = Graph.trace(loss)
    pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    reached: Dict[Tensor, np.ndarray] = {}

    for node in reversed(graph.nodes):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node.is_leaf:
            node.accumulate(grad)
            reached[node] = node.grad
            continue
        parent_grads = node.backward_fn(grad)
        for parent, parent_grad in zip(node.parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + parent_grad
            else:
                pending[key] = parent_grad
    return reached


def zero_grad(params: Iterable[Tensor]) -> None:
    for param in params:
        param.zero_grad()
