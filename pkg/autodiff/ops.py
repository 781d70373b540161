"""
Differentiable primitives.

Each primitive computes its value eagerly with numpy and records a
vector-Jacobian product on the operands' tape.
"""

from typing import Optional

import numpy as np

from autodiff.tape import DiffNode, Matrix, as_matrix
from errors import BoundsError, ContractError, DimensionError


def _same_shape(op: str, a: DiffNode, b: DiffNode) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# =============================================================================
# LINEAR ALGEBRA
# =============================================================================

def matmul(a: DiffNode, b: DiffNode) -> DiffNode:
    """a @ b."""
    if a.cols != b.rows:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    av, bv = a.value, b.value
    return a.tape.record(
        av @ bv, "matmul", (a, b),
        lambda g: (g @ bv.T if a.requires_grad else None,
                   av.T @ g if b.requires_grad else None),
    )


def transpose(a: DiffNode) -> DiffNode:
    return a.tape.record(a.value.T.copy(), "transpose", (a,), lambda g: (g.T,))


# =============================================================================
# ELEMENTWISE
# =============================================================================

def add(a: DiffNode, b: DiffNode) -> DiffNode:
    _same_shape("add", a, b)
    return a.tape.record(a.value + b.value, "add", (a, b), lambda g: (g, g))


def sub(a: DiffNode, b: DiffNode) -> DiffNode:
    _same_shape("sub", a, b)
    return a.tape.record(a.value - b.value, "sub", (a, b), lambda g: (g, -g))


def mul(a: DiffNode, b: DiffNode) -> DiffNode:
    _same_shape("mul", a, b)
    av, bv = a.value, b.value
    return a.tape.record(av * bv, "mul", (a, b), lambda g: (g * bv, g * av))


def scale(a: DiffNode, factor: float) -> DiffNode:
    factor = float(factor)
    return a.tape.record(a.value * factor, "scale", (a,), lambda g: (g * factor,))


def sigmoid(a: DiffNode) -> DiffNode:
    s = _sigmoid(a.value)
    return a.tape.record(s, "sigmoid", (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a: DiffNode) -> DiffNode:
    t = np.tanh(a.value)
    return a.tape.record(t, "tanh", (a,), lambda g: (g * (1.0 - t * t),))


def relu(a: DiffNode) -> DiffNode:
    active = a.value > 0
    return a.tape.record(np.where(active, a.value, 0.0), "relu", (a,), lambda g: (g * active,))


_UNARY = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(kind: str, *operands, factor: Optional[float] = None) -> DiffNode:
    """
    Dispatch an entrywise operation by name.

    Args:
        kind: One of add, sub, mul, sigmoid, tanh, relu, scale
        operands: One node for unary kinds and scale, two for binary kinds
        factor: Constant multiplier for kind="scale"
    """
    if kind in _BINARY:
        if len(operands) != 2:
            raise ContractError(f"{kind} takes two operands, got {len(operands)}")
        return _BINARY[kind](*operands)
    if len(operands) != 1:
        raise ContractError(f"{kind} takes one operand, got {len(operands)}")
    if kind in _UNARY:
        return _UNARY[kind](operands[0])
    if kind == "scale":
        if factor is None:
            raise ContractError("scale requires a factor")
        return scale(operands[0], factor)
    raise ContractError(f"unknown elementwise kind '{kind}'")


# =============================================================================
# BROADCASTING
# =============================================================================

def add_rowvec(a: DiffNode, row: DiffNode) -> DiffNode:
    """Add a 1 x d row to every row of an n x d node."""
    if row.rows != 1 or row.cols != a.cols:
        raise DimensionError(f"add_rowvec: cannot broadcast {row.shape} over {a.shape}")
    return a.tape.record(
        a.value + row.value, "add_rowvec", (a, row),
        lambda g: (g, g.sum(axis=0, keepdims=True)),
    )


def scale_rows(a: DiffNode, weights: DiffNode) -> DiffNode:
    """Multiply row r of an n x d node by weights[r, 0]."""
    if weights.cols != 1 or weights.rows != a.rows:
        raise DimensionError(f"scale_rows: weights {weights.shape} do not match {a.shape}")
    av, wv = a.value, weights.value
    return a.tape.record(
        av * wv, "scale_rows", (a, weights),
        lambda g: (g * wv, (g * av).sum(axis=1, keepdims=True)),
    )


def hadamard_const(a: DiffNode, mask: Matrix) -> DiffNode:
    """Entrywise product with a constant matrix; no gradient flows into the mask."""
    mask = as_matrix(mask, "mask")
    if mask.shape != a.shape:
        raise DimensionError(f"hadamard_const: mask {mask.shape} does not match {a.shape}")
    return a.tape.record(a.value * mask, "hadamard_const", (a,), lambda g: (g * mask,))


# =============================================================================
# REDUCTIONS (1x1 results)
# =============================================================================

def _scalar(x: float) -> np.ndarray:
    return np.array([[x]], dtype=np.float64)


def reduce_sum(a: DiffNode) -> DiffNode:
    shape = a.shape
    return a.tape.record(_scalar(a.value.sum()), "sum", (a,),
                         lambda g: (np.full(shape, g[0, 0]),))


def reduce_mean(a: DiffNode) -> DiffNode:
    shape = a.shape
    count = a.value.size
    return a.tape.record(_scalar(a.value.mean()), "mean", (a,),
                         lambda g: (np.full(shape, g[0, 0] / count),))


def frobenius_sq(a: DiffNode) -> DiffNode:
    av = a.value
    return a.tape.record(_scalar(np.sum(av * av)), "frobenius_sq", (a,),
                         lambda g: (2.0 * av * g[0, 0],))


def trace(a: DiffNode) -> DiffNode:
    if a.rows != a.cols:
        raise DimensionError(f"trace requires a square matrix, got {a.shape}")
    n = a.rows
    return a.tape.record(_scalar(np.trace(a.value)), "trace", (a,),
                         lambda g: (np.eye(n) * g[0, 0],))


_REDUCTIONS = {"sum": reduce_sum, "mean": reduce_mean,
               "frobenius_sq": frobenius_sq, "trace": trace}


def reduce(kind: str, a: DiffNode) -> DiffNode:
    """Dispatch a reduction by name: sum, mean, frobenius_sq, trace."""
    if kind not in _REDUCTIONS:
        raise ContractError(f"unknown reduction '{kind}'")
    return _REDUCTIONS[kind](a)


# =============================================================================
# SOFTMAX AND COLUMN PARTITIONS
# =============================================================================

def rowwise_softmax(a: DiffNode) -> DiffNode:
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return a.tape.record(s, "softmax", (a,), backward)


def log_softmax(a: DiffNode) -> DiffNode:
    """Row-wise log-softmax, fused so log(0) never occurs."""
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = shifted - log_z
    s = np.exp(out)

    def backward(g):
        return (g - s * g.sum(axis=1, keepdims=True),)

    return a.tape.record(out, "log_softmax", (a,), backward)


def concat_cols(*nodes: DiffNode) -> DiffNode:
    """Concatenate nodes left to right; all must share the row count."""
    if len(nodes) < 2:
        raise ContractError("concat_cols needs at least two operands")
    rows = nodes[0].rows
    for node in nodes[1:]:
        if node.rows != rows:
            raise DimensionError(f"concat_cols: row counts {rows} and {node.rows} differ")
    bounds = np.cumsum([0] + [n.cols for n in nodes])

    def backward(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]].copy() for i in range(len(nodes)))

    return nodes[0].tape.record(
        np.concatenate([n.value for n in nodes], axis=1), "concat_cols", nodes, backward
    )


def slice_cols(a: DiffNode, start: int, stop: int) -> DiffNode:
    """Columns [start, stop) of a."""
    if not (0 <= start < stop <= a.cols):
        raise BoundsError(f"slice_cols: [{start}, {stop}) out of range for {a.cols} columns")
    shape = a.shape

    def backward(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return a.tape.record(a.value[:, start:stop].copy(), "slice_cols", (a,), backward)
