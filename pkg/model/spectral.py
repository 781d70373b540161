"""
Chebyshev spectral graph convolution.

    out = relu( sum_k T_k(L~) X Theta_k + bias )

with T_k evaluated through the three-term recurrence, so the graph is never
eigendecomposed.
"""

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from autodiff import ops
from autodiff.tape import DiffNode
from errors import ContractError, DimensionError


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


@dataclass(frozen=True)
class ChebLayer:
    """Shapes and parameter names of one Chebyshev layer."""

    K: int
    in_dim: int
    out_dim: int
    prefix: str = "cheb"
    use_bias: bool = True

    def __post_init__(self):
        if self.K < 0:
            raise ContractError(f"Chebyshev order K must be >= 0, got {self.K}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ContractError(f"layer dims must be positive, got {self.in_dim}x{self.out_dim}")

    def theta_name(self, k: int) -> str:
        return f"{self.prefix}.theta{k}"

    @property
    def bias_name(self) -> str:
        return f"{self.prefix}.bias"

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        params = {self.theta_name(k): glorot_uniform(rng, self.in_dim, self.out_dim)
                  for k in range(self.K + 1)}
        if self.use_bias:
            params[self.bias_name] = np.zeros((1, self.out_dim))
        return params


def cheb_basis(rescaled: np.ndarray, x: DiffNode, K: int) -> list[DiffNode]:
    """
    B_0 = X, B_1 = L~X, B_k = 2 L~ B_{k-1} - B_{k-2}.

    The rescaled Laplacian enters as a constant.
    """
    if K < 0:
        raise ContractError(f"Chebyshev order K must be >= 0, got {K}")
    n = x.rows
    if rescaled.shape != (n, n):
        raise DimensionError(f"rescaled Laplacian {rescaled.shape} does not match {n} rows")

    basis = [x]
    if K == 0:
        return basis
    lap = x.tape.constant(rescaled, "rescaled_laplacian")
    basis.append(ops.matmul(lap, x))
    for _ in range(2, K + 1):
        basis.append(ops.sub(ops.scale(ops.matmul(lap, basis[-1]), 2.0), basis[-2]))
    return basis


def cheb_forward(
    layer: ChebLayer,
    params: Mapping[str, DiffNode],
    rescaled: np.ndarray,
    x: DiffNode,
    activate: bool = True,
) -> DiffNode:
    """
    Apply the layer to an n x in_dim node.

    Args:
        layer: Layer definition
        params: Parameter leaves keyed by name
        rescaled: n x n rescaled Laplacian
        x: Input signal
        activate: Apply ReLU (set False for the pre-activation output)
    """
    if x.cols != layer.in_dim:
        raise DimensionError(f"{layer.prefix}: input has {x.cols} columns, layer expects {layer.in_dim}")

    basis = cheb_basis(rescaled, x, layer.K)
    out = ops.matmul(basis[0], params[layer.theta_name(0)])
    for k in range(1, layer.K + 1):
        out = ops.add(out, ops.matmul(basis[k], params[layer.theta_name(k)]))
    if layer.use_bias:
        out = ops.add_rowvec(out, params[layer.bias_name])
    return ops.relu(out) if activate else out
