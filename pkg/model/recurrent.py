"""
Recurrent graph-convolutional branch.

One branch per population graph: a Chebyshev layer feeds an LSTM cell that is
unrolled T steps; every step adds a projected increment to the running
prediction. In the default (non-autoregressive) mode the Chebyshev layer only
ever sees the original input.
"""

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from autodiff import ops
from autodiff.tape import DiffNode
from errors import ContractError, DimensionError
from model.spectral import ChebLayer, cheb_forward

GATES = ("f", "i", "o", "g")

# Called with (step, gcn_input_value) on every unroll step
GcnInputHook = Callable[[int, np.ndarray], None]


@dataclass(frozen=True)
class LstmCell:
    input_dim: int
    hidden_dim: int
    prefix: str = "lstm"

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ContractError(f"LSTM dims must be positive, got {self.input_dim}, {self.hidden_dim}")

    def name(self, kind: str, gate: str) -> str:
        return f"{self.prefix}.{kind}_{gate}"

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        s = 1.0 / np.sqrt(self.hidden_dim)
        params = {}
        for gate in GATES:
            params[self.name("W", gate)] = rng.uniform(-s, s, size=(self.input_dim, self.hidden_dim))
            params[self.name("U", gate)] = rng.uniform(-s, s, size=(self.hidden_dim, self.hidden_dim))
            fill = 1.0 if gate == "f" else 0.0
            params[self.name("b", gate)] = np.full((1, self.hidden_dim), fill)
        return params


@dataclass
class BranchState:
    h: DiffNode
    c: DiffNode
    z_acc: DiffNode
    step: int = 0


def initial_state(z: DiffNode, hidden_dim: int) -> BranchState:
    tape = z.tape
    zeros = np.zeros((z.rows, hidden_dim))
    return BranchState(h=tape.constant(zeros, "h0"), c=tape.constant(zeros, "c0"), z_acc=z)


def lstm_step(cell: LstmCell, params: Mapping[str, DiffNode], x: DiffNode, state: BranchState) -> BranchState:
    """
    f = sig(xW_f + hU_f + b_f), i = sig(...), o = sig(...), g = tanh(...)
    c' = f*c + i*g, h' = o*tanh(c')
    """
    if x.cols != cell.input_dim:
        raise DimensionError(f"{cell.prefix}: input has {x.cols} columns, cell expects {cell.input_dim}")
    if state.h.shape != (x.rows, cell.hidden_dim):
        raise DimensionError(f"{cell.prefix}: state {state.h.shape} does not match input rows {x.rows}")

    def pre(gate):
        lin = ops.add(ops.matmul(x, params[cell.name("W", gate)]),
                      ops.matmul(state.h, params[cell.name("U", gate)]))
        return ops.add_rowvec(lin, params[cell.name("b", gate)])

    f = ops.sigmoid(pre("f"))
    i = ops.sigmoid(pre("i"))
    o = ops.sigmoid(pre("o"))
    g = ops.tanh(pre("g"))
    c = ops.add(ops.mul(f, state.c), ops.mul(i, g))
    h = ops.mul(o, ops.tanh(c))
    return BranchState(h=h, c=c, z_acc=state.z_acc, step=state.step + 1)


@dataclass(frozen=True)
class Branch:
    """Chebyshev layer + LSTM cell + output projection for one graph."""

    index: int
    cheb: ChebLayer
    cell: LstmCell
    out_dim: int

    @classmethod
    def create(cls, index: int, width: int, hidden: int, K: int, use_bias: bool = True) -> "Branch":
        prefix = f"branch{index}"
        return cls(
            index=index,
            cheb=ChebLayer(K=K, in_dim=width, out_dim=hidden, prefix=f"{prefix}.cheb", use_bias=use_bias),
            cell=LstmCell(input_dim=hidden, hidden_dim=hidden, prefix=f"{prefix}.lstm"),
            out_dim=width,
        )

    @property
    def w_out_name(self) -> str:
        return f"branch{self.index}.out.W"

    @property
    def b_out_name(self) -> str:
        return f"branch{self.index}.out.b"

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        params = self.cheb.init_params(rng)
        params.update(self.cell.init_params(rng))
        # Zero projection: the branch starts as the identity on Z
        params[self.w_out_name] = np.zeros((self.cell.hidden_dim, self.out_dim))
        params[self.b_out_name] = np.zeros((1, self.out_dim))
        return params


def branch_forward(
    branch: Branch,
    params: Mapping[str, DiffNode],
    rescaled: np.ndarray,
    z: DiffNode,
    steps: int,
    autoregressive: bool = False,
    on_step: Optional[GcnInputHook] = None,
) -> DiffNode:
    """
    Unroll the branch for `steps` steps and return the accumulated prediction.

    Args:
        branch: Branch definition
        params: Parameter leaves keyed by name
        rescaled: Rescaled Laplacian of this branch's graph
        z: Assembled input (missing entries and hidden labels zero-filled)
        steps: Unroll length T >= 1
        autoregressive: Feed the running prediction back into the GCN
        on_step: Optional hook receiving the GCN input at every step
    """
    if steps < 1:
        raise ContractError(f"unroll steps T must be >= 1, got {steps}")
    if z.cols != branch.out_dim:
        raise DimensionError(f"branch{branch.index}: input has {z.cols} columns, expected {branch.out_dim}")

    state = initial_state(z, branch.cell.hidden_dim)
    q = None if autoregressive else cheb_forward(branch.cheb, params, rescaled, z)

    for step in range(1, steps + 1):
        gcn_input = state.z_acc if autoregressive else z
        if on_step is not None:
            on_step(step, gcn_input.value)
        if autoregressive:
            q = cheb_forward(branch.cheb, params, rescaled, gcn_input)
        state = lstm_step(branch.cell, params, q, state)
        dz = ops.add_rowvec(ops.matmul(state.h, params[branch.w_out_name]), params[branch.b_out_name])
        state.z_acc = ops.add(state.z_acc, dz)

    return state.z_acc
