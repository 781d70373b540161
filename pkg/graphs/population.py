"""
Population graphs built from per-row meta-features.

One graph per meta-feature: rows i and j are connected when their meta
values differ by at most the feature's threshold. Categorical features use
equality.
"""

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, eigh

from constants import LAMBDA_MAX_FLOOR, POWER_ITERATION_MAX_ITERS, POWER_ITERATION_TOL
from errors import ContractError, IngestionError, NumericError
from utils.log import get_logger

logger = get_logger("graphs.population")


@dataclass(frozen=True)
class MetaFeature:
    """Auxiliary per-row values used only for graph construction."""

    name: str
    values: np.ndarray
    threshold: float = 0.0
    categorical: bool = False

    def __post_init__(self):
        if self.threshold < 0:
            raise ContractError(f"meta-feature '{self.name}': threshold must be >= 0, got {self.threshold}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).ravel())

    @property
    def effective_threshold(self) -> float:
        return 0.0 if self.categorical else float(self.threshold)


@dataclass(frozen=True)
class PopulationGraph:
    """Adjacency plus the Laplacians derived from it."""

    name: str
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    rescaled: np.ndarray
    lambda_max: float

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, k=1).sum())

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(rows.tolist(), cols.tolist()))


def similarity_adjacency(values: np.ndarray, threshold: float) -> np.ndarray:
    """W(i,j) = 1 iff |v_i - v_j| <= threshold and i != j."""
    diff = np.abs(values[:, None] - values[None, :])
    adjacency = (diff <= threshold).astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    return adjacency


def normalized_laplacian(adjacency: np.ndarray) -> np.ndarray:
    """
    Symmetric normalized Laplacian I - D^-1/2 W D^-1/2.

    Rows and columns of isolated nodes are all zero.
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ContractError(f"adjacency must be square, got shape {adjacency.shape}")
    if not np.array_equal(adjacency, adjacency.T):
        raise ContractError("adjacency must be symmetric")
    if (adjacency < 0).any():
        raise ContractError("adjacency must be non-negative")
    if np.diag(adjacency).any():
        raise ContractError("adjacency must have a zero diagonal")

    degree = adjacency.sum(axis=1)
    connected = degree > 0
    inv_sqrt = np.zeros_like(degree)
    inv_sqrt[connected] = 1.0 / np.sqrt(degree[connected])

    laplacian = np.diag(connected.astype(np.float64)) - inv_sqrt[:, None] * adjacency * inv_sqrt[None, :]
    return laplacian


def largest_eigenvalue(
    matrix: np.ndarray,
    tol: float = POWER_ITERATION_TOL,
    max_iters: int = POWER_ITERATION_MAX_ITERS,
) -> float:
    """
    Largest eigenvalue of a symmetric PSD matrix.

    Power iteration stops once the eigen-residual ||Mv - lambda v|| drops
    below tol (relative to max(1, lambda)). Near-degenerate top eigenvalues,
    as produced by cliques of similar size, can stall it; after max_iters the
    dense symmetric eigensolver takes over.

    Raises:
        NumericError: neither method produced an eigenvalue
    """
    n = matrix.shape[0]
    # Fixed pseudo-random start; the all-ones vector can be orthogonal to the top eigenvector
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    w = matrix @ v

    for _ in range(max_iters):
        norm = np.linalg.norm(w)
        if norm < LAMBDA_MAX_FLOOR:
            return 0.0
        v = w / norm
        w = matrix @ v
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol * max(1.0, abs(lam)):
            return lam

    logger.debug(f"Power iteration stalled after {max_iters} iterations; using the dense eigensolver")
    try:
        top = eigh(matrix, eigvals_only=True, subset_by_index=[n - 1, n - 1])
    except LinAlgError as e:
        raise NumericError(f"power iteration did not converge after {max_iters} iterations "
                           f"and the dense eigensolver failed: {e}")
    return float(top[0])


def rescale_laplacian(laplacian: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Map the spectrum of L into [-1, 1]: L~ = (2 / lambda_max) L - I.

    Edgeless graphs (lambda_max below the floor) give L~ = -I.
    """
    n = laplacian.shape[0]
    lambda_max = largest_eigenvalue(laplacian)
    if lambda_max < LAMBDA_MAX_FLOOR:
        return -np.eye(n), 0.0
    return (2.0 / lambda_max) * laplacian - np.eye(n), lambda_max


def build_graph(meta: MetaFeature) -> PopulationGraph:
    """
    Build the thresholded-similarity population graph for one meta-feature.

    Raises:
        ContractError: fewer than two rows
        IngestionError: a meta value is missing
    """
    values = meta.values
    if values.shape[0] < 2:
        raise ContractError(f"meta-feature '{meta.name}' needs at least 2 rows, got {values.shape[0]}")
    missing = np.flatnonzero(~np.isfinite(values))
    if len(missing):
        raise IngestionError(f"meta-feature '{meta.name}' is missing a value at row {int(missing[0])}")

    adjacency = similarity_adjacency(values, meta.effective_threshold)
    if not adjacency.any():
        logger.warning(f"Graph '{meta.name}' has no edges; it contributes nothing to diffusion")

    laplacian = normalized_laplacian(adjacency)
    rescaled, lambda_max = rescale_laplacian(laplacian)
    return PopulationGraph(
        name=meta.name,
        adjacency=adjacency,
        degree=adjacency.sum(axis=1),
        laplacian=laplacian,
        rescaled=rescaled,
        lambda_max=lambda_max,
    )


def build_graphs(metas: Sequence[MetaFeature]) -> list[PopulationGraph]:
    """Build one graph per meta-feature, in order."""
    graphs = [build_graph(meta) for meta in metas]
    for graph in graphs:
        logger.debug(f"Graph '{graph.name}': n={graph.n}, edges={graph.edge_count}, "
                     f"lambda_max={graph.lambda_max:.6f}")
    return graphs


def graph_summary(graph: PopulationGraph) -> dict:
    """n, edge count and degree histogram (degree -> node count)."""
    histogram = Counter(int(d) for d in graph.degree)
    return {
        "name": graph.name,
        "n": graph.n,
        "edge_count": graph.edge_count,
        "lambda_max": graph.lambda_max,
        "degree_histogram": {str(d): histogram[d] for d in sorted(histogram)},
    }


def export_graph(graph: PopulationGraph, out_dir: Union[str, Path]) -> tuple[Path, Path]:
    """
    Write `<name>.edges` ("i j" per line) and `<name>.json` (summary).

    Returns:
        (edge list path, summary path)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    edge_path = out_dir / f"{graph.name}.edges"
    summary_path = out_dir / f"{graph.name}.json"

    with open(edge_path, "w") as f:
        for i, j in graph.edges():
            f.write(f"{i} {j}\n")
    with open(summary_path, "w") as f:
        json.dump(graph_summary(graph), f, indent=2)

    return edge_path, summary_path
