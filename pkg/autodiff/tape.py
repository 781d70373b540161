"""
Tape-based reverse-mode differentiation over dense float64 matrices.

A Tape records every node in creation order. Since a node can only be built
from nodes that already exist, creation order is a topological order and the
backward pass simply walks the tape in reverse.
"""

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from errors import ContractError, DimensionError, NumericError

Matrix = np.ndarray

# Maps the upstream gradient to one gradient (or None) per parent
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def as_matrix(data, name: str = "matrix") -> Matrix:
    """
    Validate and convert data into a 2-D float64 matrix.

    Args:
        data: Array-like with exactly two dimensions
        name: Label used in error messages

    Returns:
        C-contiguous float64 ndarray

    Raises:
        DimensionError: data is not 2-D or has an empty dimension
        NumericError: data contains NaN or Inf
    """
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have positive rows and cols, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NumericError(f"{name} contains non-finite entries")
    return arr


class DiffNode:
    """A value on a tape plus the record of how it was produced."""

    __slots__ = ("tape", "value", "grad", "op", "parents", "backward_fn",
                 "requires_grad", "name", "index")

    def __init__(
        self,
        tape: "Tape",
        value: Matrix,
        op: str,
        parents: tuple = (),
        backward_fn: Optional[BackwardFn] = None,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.tape = tape
        self.value = value
        self.grad = np.zeros_like(value)
        self.op = op
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad
        self.name = name
        self.index = -1

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"DiffNode({self.op}{label}, shape={self.shape})"

    # Operator sugar; the functional forms live in autodiff.ops
    def __matmul__(self, other: "DiffNode") -> "DiffNode":
        from autodiff import ops
        return ops.matmul(self, other)

    def __add__(self, other: "DiffNode") -> "DiffNode":
        from autodiff import ops
        return ops.add(self, other)

    def __sub__(self, other: "DiffNode") -> "DiffNode":
        from autodiff import ops
        return ops.sub(self, other)

    def __mul__(self, other) -> "DiffNode":
        from autodiff import ops
        if isinstance(other, DiffNode):
            return ops.mul(self, other)
        return ops.scale(self, float(other))

    __rmul__ = __mul__


class Tape:
    """Ordered record of nodes for one forward/backward pass."""

    def __init__(self):
        self.nodes: list[DiffNode] = []
        self.leaves: list[DiffNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _append(self, node: DiffNode) -> DiffNode:
        node.index = len(self.nodes)
        self.nodes.append(node)
        return node

    def parameter(self, value, name: str) -> DiffNode:
        """Register a trainable leaf."""
        node = DiffNode(self, as_matrix(value, name), "leaf", requires_grad=True, name=name)
        self.leaves.append(node)
        return self._append(node)

    def constant(self, value, name: Optional[str] = None) -> DiffNode:
        """Register a non-differentiable input (masks, Laplacians, data)."""
        return self._append(DiffNode(self, as_matrix(value, name or "constant"), "const", name=name))

    def record(
        self,
        value: np.ndarray,
        op: str,
        parents: Iterable[DiffNode],
        backward_fn: BackwardFn,
    ) -> DiffNode:
        """
        Append the result of an operation.

        Args:
            value: Computed output matrix
            op: Operation identifier
            parents: Input nodes, all on this tape
            backward_fn: Vector-Jacobian product, one entry per parent

        Returns:
            The new node
        """
        parents = tuple(parents)
        for parent in parents:
            if parent.tape is not self:
                raise ContractError(f"operand of '{op}' belongs to a different tape")
        if not np.isfinite(value).all():
            raise NumericError(f"operation '{op}' produced non-finite values")
        requires_grad = any(p.requires_grad for p in parents)
        node = DiffNode(
            self,
            np.ascontiguousarray(value, dtype=np.float64),
            op,
            parents,
            backward_fn if requires_grad else None,
            requires_grad,
        )
        return self._append(node)

    def zero_grad(self) -> None:
        """Reset every gradient on the tape to zero."""
        for node in self.nodes:
            node.grad.fill(0.0)

    def backward(self, loss: DiffNode) -> dict[str, np.ndarray]:
        """
        Propagate d(loss)/d(node) to every node that precedes the loss.

        Leaf gradients accumulate across calls; call zero_grad() between
        passes to reproduce them.

        Args:
            loss: 1x1 node on this tape

        Returns:
            Mapping of leaf name to gradient (copies)
        """
        if loss.tape is not self:
            raise ContractError("loss belongs to a different tape")
        if loss.shape != (1, 1):
            raise ContractError(f"backward requires a scalar (1x1) loss, got shape {loss.shape}")

        for node in self.nodes:
            if node.backward_fn is not None:
                node.grad.fill(0.0)
        loss.grad += 1.0

        for node in reversed(self.nodes[: loss.index + 1]):
            if node.backward_fn is None:
                continue
            parent_grads = node.backward_fn(node.grad)
            for parent, grad in zip(node.parents, parent_grads):
                if grad is None or not parent.requires_grad:
                    continue
                if grad.shape != parent.shape:
                    raise DimensionError(
                        f"backward of '{node.op}' produced grad {grad.shape} for parent {parent.shape}"
                    )
                parent.grad += grad

        return self.gradients()

    def gradients(self) -> dict[str, np.ndarray]:
        """Current leaf gradients keyed by parameter name."""
        return {leaf.name: leaf.grad.copy() for leaf in self.leaves}
