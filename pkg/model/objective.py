"""
Masked multi-graph objective.

    sum_i [ g_a/2 * tr(Zbar_i^T L_i Zbar_i) + g_b/2 * ||Omega_x o (Zbar_i - Z)||_F^2 ]
        + g_c * CE(label block of Zhat, labeled rows)

With one branch and no labeled rows this is the single-graph completion loss;
with one branch and labels it adds the classification term.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from autodiff import ops
from autodiff.tape import DiffNode, as_matrix
from errors import ConfigError, ContractError, DimensionError


@dataclass(frozen=True)
class LossWeights:
    gamma_a: float = 1.0
    gamma_b: float = 1.0
    gamma_c: float = 1.0

    def __post_init__(self):
        values = (self.gamma_a, self.gamma_b, self.gamma_c)
        if any(g < 0 for g in values):
            raise ConfigError(f"loss weights must be non-negative, got {values}")
        if not any(g > 0 for g in values):
            raise ConfigError("at least one loss weight must be positive")


def _check_binary(name: str, mask: np.ndarray) -> None:
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ContractError(f"{name} entries must be 0 or 1")


@dataclass(frozen=True)
class MaskPair:
    """Observation masks over the n x (m+c) assembled matrix."""

    omega_x: np.ndarray
    omega_y: np.ndarray
    n_features: int

    def __post_init__(self):
        omega_x = as_matrix(self.omega_x, "omega_x")
        omega_y = as_matrix(self.omega_y, "omega_y")
        if omega_x.shape != omega_y.shape:
            raise DimensionError(f"mask shapes differ: {omega_x.shape} vs {omega_y.shape}")
        _check_binary("omega_x", omega_x)
        _check_binary("omega_y", omega_y)
        if (omega_x * omega_y).any():
            raise ContractError("omega_x and omega_y must have disjoint supports")
        if not 0 < self.n_features <= omega_x.shape[1]:
            raise ContractError(f"n_features {self.n_features} out of range for {omega_x.shape[1]} columns")
        if omega_x[:, self.n_features:].any():
            raise ContractError("omega_x must be zero on label columns")
        if omega_y[:, :self.n_features].any():
            raise ContractError("omega_y must be zero on feature columns")
        object.__setattr__(self, "omega_x", omega_x)
        object.__setattr__(self, "omega_y", omega_y)

    @property
    def n_classes(self) -> int:
        return self.omega_x.shape[1] - self.n_features

    @property
    def labeled_rows(self) -> np.ndarray:
        return self.omega_y[:, self.n_features:].any(axis=1)


@dataclass
class LossTerms:
    """Unweighted term nodes plus the weighted total."""

    dirichlet: DiffNode
    frobenius: DiffNode
    ce: Optional[DiffNode]
    total: DiffNode

    def values(self) -> dict[str, float]:
        return {
            "dirichlet": float(self.dirichlet.value[0, 0]),
            "frobenius": float(self.frobenius.value[0, 0]),
            "ce": float(self.ce.value[0, 0]) if self.ce is not None else float("nan"),
            "total": float(self.total.value[0, 0]),
        }


def dirichlet(zbar: DiffNode, laplacian: np.ndarray) -> DiffNode:
    """tr(Zbar^T L Zbar), written as sum(Zbar o (L Zbar))."""
    if laplacian.ndim != 2 or laplacian.shape[0] != laplacian.shape[1]:
        raise DimensionError(f"Laplacian must be square, got {laplacian.shape}")
    if laplacian.shape[0] != zbar.rows:
        raise DimensionError(f"Laplacian {laplacian.shape} does not match {zbar.rows} rows")
    lap = zbar.tape.constant(laplacian, "laplacian")
    return ops.reduce_sum(ops.mul(zbar, ops.matmul(lap, zbar)))


def masked_frobenius(zbar: DiffNode, z: np.ndarray, omega_x: np.ndarray) -> DiffNode:
    """||Omega_x o (Zbar - Z)||_F^2; unobserved entries contribute exactly 0."""
    omega_x = as_matrix(omega_x, "omega_x")
    _check_binary("omega_x", omega_x)
    if omega_x.shape != zbar.shape or np.shape(z) != zbar.shape:
        raise DimensionError(f"masked_frobenius: shapes {zbar.shape}, {np.shape(z)}, {omega_x.shape} differ")
    target = zbar.tape.constant(z, "z")
    return ops.frobenius_sq(ops.hadamard_const(ops.sub(zbar, target), omega_x))


def masked_cross_entropy(zhat: DiffNode, z: np.ndarray, omega_y: np.ndarray, n_features: int) -> DiffNode:
    """
    Mean over labeled rows of -sum_c y_c log softmax(label block)_c.

    Raises:
        ContractError: no labeled rows
    """
    omega_y = as_matrix(omega_y, "omega_y")
    _check_binary("omega_y", omega_y)
    if omega_y.shape != zhat.shape or np.shape(z) != zhat.shape:
        raise DimensionError(f"masked_cross_entropy: shapes {zhat.shape}, {np.shape(z)}, {omega_y.shape} differ")
    if not 0 <= n_features < zhat.cols:
        raise ContractError(f"no label columns after {n_features} feature columns")

    label_mask = omega_y[:, n_features:]
    labeled = int(label_mask.any(axis=1).sum())
    if labeled == 0:
        raise ContractError("cross-entropy is undefined without labeled rows")

    targets = np.asarray(z)[:, n_features:] * label_mask
    log_probs = ops.log_softmax(ops.slice_cols(zhat, n_features, zhat.cols))
    return ops.scale(ops.reduce_sum(ops.hadamard_const(log_probs, targets)), -1.0 / labeled)


def cross_entropy_value(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of integer labels under row-wise softmax of logits (no tape)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def mgmc_terms(
    branch_outputs: Sequence[DiffNode],
    zhat: DiffNode,
    z: np.ndarray,
    masks: MaskPair,
    laplacians: Sequence[np.ndarray],
    weights: LossWeights,
) -> LossTerms:
    """
    Build every term; only terms with a positive weight enter the total.
    """
    if len(branch_outputs) != len(laplacians):
        raise ContractError(f"{len(branch_outputs)} branch outputs but {len(laplacians)} Laplacians")
    if not branch_outputs:
        raise ContractError("at least one branch output is required")

    dir_terms = [dirichlet(zbar, lap) for zbar, lap in zip(branch_outputs, laplacians)]
    fro_terms = [masked_frobenius(zbar, z, masks.omega_x) for zbar in branch_outputs]
    dir_total = dir_terms[0] if len(dir_terms) == 1 else ops.reduce_sum(ops.concat_cols(*dir_terms))
    fro_total = fro_terms[0] if len(fro_terms) == 1 else ops.reduce_sum(ops.concat_cols(*fro_terms))

    ce = None
    if masks.labeled_rows.any():
        ce = masked_cross_entropy(zhat, z, masks.omega_y, masks.n_features)
    elif weights.gamma_c > 0:
        raise ContractError("gamma_c > 0 but no rows are labeled")

    parts = []
    if weights.gamma_a > 0:
        parts.append(ops.scale(dir_total, weights.gamma_a / 2.0))
    if weights.gamma_b > 0:
        parts.append(ops.scale(fro_total, weights.gamma_b / 2.0))
    if weights.gamma_c > 0:
        parts.append(ops.scale(ce, weights.gamma_c))

    total = parts[0]
    for part in parts[1:]:
        total = ops.add(total, part)
    return LossTerms(dirichlet=dir_total, frobenius=fro_total, ce=ce, total=total)


def mgmc_loss(
    branch_outputs: Sequence[DiffNode],
    zhat: DiffNode,
    z: np.ndarray,
    masks: MaskPair,
    laplacians: Sequence[np.ndarray],
    weights: LossWeights,
) -> DiffNode:
    """Scalar multi-graph loss."""
    return mgmc_terms(branch_outputs, zhat, z, masks, laplacians, weights).total
