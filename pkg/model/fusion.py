"""
Self-attention fusion of per-graph branch predictions.

Each row gets a convex combination of the branch outputs. Two scoring
heads are available:
- additive (default): s_{r,i} = tanh(Zbar_i[r] W_a) v
- query_key: branches attend to each other per row; a branch's weight is the
  mean attention it receives
Scope "global" averages scores over rows so every row shares one weight per
graph.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from autodiff import ops
from autodiff.tape import DiffNode
from constants import DEFAULT_ATTENTION_WIDTH, FUSION_MODES, FUSION_SCOPES
from errors import ConfigError, ContractError, DimensionError
from model.spectral import glorot_uniform


@dataclass(frozen=True)
class FusionHead:
    """One scoring head shared across branches."""

    in_dim: int
    a_dim: int = DEFAULT_ATTENTION_WIDTH
    mode: str = "additive"
    scope: str = "row"
    prefix: str = "fusion"

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ConfigError(f"Invalid fusion mode '{self.mode}'. Valid: {', '.join(FUSION_MODES)}")
        if self.scope not in FUSION_SCOPES:
            raise ConfigError(f"Invalid fusion scope '{self.scope}'. Valid: {', '.join(FUSION_SCOPES)}")

    def name(self, part: str) -> str:
        return f"{self.prefix}.{part}"

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self.mode == "additive":
            return {
                self.name("W_a"): glorot_uniform(rng, self.in_dim, self.a_dim),
                self.name("v"): glorot_uniform(rng, self.a_dim, 1),
            }
        return {
            self.name("W_q"): glorot_uniform(rng, self.in_dim, self.a_dim),
            self.name("W_k"): glorot_uniform(rng, self.in_dim, self.a_dim),
        }


def _stack(columns: list[DiffNode]) -> DiffNode:
    return columns[0] if len(columns) == 1 else ops.concat_cols(*columns)


def _additive_scores(head: FusionHead, params, outputs: Sequence[DiffNode]) -> DiffNode:
    w_a, v = params[head.name("W_a")], params[head.name("v")]
    return _stack([ops.matmul(ops.tanh(ops.matmul(z, w_a)), v) for z in outputs])


def _query_key_weights(head: FusionHead, params, outputs: Sequence[DiffNode]) -> DiffNode:
    tape = outputs[0].tape
    w_q, w_k = params[head.name("W_q")], params[head.name("W_k")]
    queries = [ops.matmul(z, w_q) for z in outputs]
    keys = [ops.matmul(z, w_k) for z in outputs]
    row_sum = tape.constant(np.ones((head.a_dim, 1)), "ones_a")
    inv_sqrt = 1.0 / np.sqrt(head.a_dim)

    received = None
    for q in queries:
        scores = _stack([ops.scale(ops.matmul(ops.mul(q, k), row_sum), inv_sqrt) for k in keys])
        if head.scope == "global":
            scores = _broadcast_row_mean(scores)
        attn = ops.rowwise_softmax(scores)
        received = attn if received is None else ops.add(received, attn)
    return ops.scale(received, 1.0 / len(outputs))


def _broadcast_row_mean(scores: DiffNode) -> DiffNode:
    """Replace every row by the column means."""
    tape = scores.tape
    n = scores.rows
    mean = ops.matmul(tape.constant(np.full((1, n), 1.0 / n), "row_mean"), scores)
    return ops.matmul(tape.constant(np.ones((n, 1)), "ones_n"), mean)


def fuse(
    head: FusionHead,
    params: Mapping[str, DiffNode],
    outputs: Sequence[DiffNode],
) -> tuple[DiffNode, DiffNode]:
    """
    Combine branch outputs into one prediction.

    Returns:
        (fused n x (m+c) node, n x I attention weights with rows summing to 1)
    """
    if len(outputs) < 1:
        raise ContractError("fuse needs at least one branch output")
    shape = outputs[0].shape
    for i, z in enumerate(outputs):
        if z.shape != shape:
            raise DimensionError(f"branch output {i} has shape {z.shape}, expected {shape}")
    if shape[1] != head.in_dim:
        raise DimensionError(f"branch outputs have {shape[1]} columns, head expects {head.in_dim}")

    if head.mode == "additive":
        scores = _additive_scores(head, params, outputs)
        if head.scope == "global":
            scores = _broadcast_row_mean(scores)
        alpha = ops.rowwise_softmax(scores)
    else:
        alpha = _query_key_weights(head, params, outputs)

    fused = None
    for i, z in enumerate(outputs):
        weighted = ops.scale_rows(z, ops.slice_cols(alpha, i, i + 1))
        fused = weighted if fused is None else ops.add(fused, weighted)
    return fused, alpha
