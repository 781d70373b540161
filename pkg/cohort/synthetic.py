"""
Synthetic clustered low-rank data with noisy meta-features.

Each row belongs to one of c clusters. Cluster k has its own loading
matrix V_k (m x r) and centre mu_k (r); a row's features are
u_i V_k^T with u_i scattered around mu_k, plus Gaussian noise. Every
meta-feature copies the cluster id with probability rho and otherwise
takes a different id uniformly at random.
"""

from dataclasses import dataclass

import numpy as np

from cohort.dataset import MaskedDataset
from errors import ConfigError
from graphs.population import MetaFeature
from utils.log import get_logger

logger = get_logger("cohort.synthetic")

# Within-cluster spread of the latent coordinates relative to the centres
CLUSTER_SPREAD = 0.3


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 300
    m: int = 40
    c: int = 3
    rank: int = 2
    noise: float = 0.3
    n_meta: int = 3
    rho: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.m < 1:
            raise ConfigError(f"synthetic data needs n >= 2 and m >= 1, got n={self.n}, m={self.m}")
        if self.c < 2 or self.c > self.n:
            raise ConfigError(f"class count must be in [2, n], got {self.c}")
        if not 1 <= self.rank <= min(self.n, self.m):
            raise ConfigError(f"rank must be in [1, min(n, m)] = [1, {min(self.n, self.m)}], got {self.rank}")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if not 0 <= self.rho <= 1:
            raise ConfigError(f"rho must be in [0, 1], got {self.rho}")
        if self.n_meta < 0:
            raise ConfigError(f"n_meta must be >= 0, got {self.n_meta}")


def _noisy_copy(rng: np.random.Generator, clusters: np.ndarray, c: int, rho: float) -> np.ndarray:
    keep = rng.random(len(clusters)) < rho
    # shift by 1..c-1 lands uniformly on a different id
    other = (clusters + rng.integers(1, c, size=len(clusters))) % c
    return np.where(keep, clusters, other).astype(np.float64)


def generate_synthetic(spec: SyntheticSpec) -> MaskedDataset:
    """Draw a fully observed dataset whose clean matrix is kept as ground truth."""
    rng = np.random.default_rng(spec.seed)
    clusters = rng.permutation(np.arange(spec.n) % spec.c)

    centres = rng.standard_normal((spec.c, spec.rank))
    loadings = rng.standard_normal((spec.c, spec.m, spec.rank))
    latent = centres[clusters] + CLUSTER_SPREAD * rng.standard_normal((spec.n, spec.rank))
    clean = np.einsum("nr,nmr->nm", latent, loadings[clusters])
    raw = clean + spec.noise * rng.standard_normal((spec.n, spec.m))

    metas = [
        MetaFeature(f"meta{i}", _noisy_copy(rng, clusters, spec.c, spec.rho), threshold=0.0, categorical=True)
        for i in range(spec.n_meta)
    ]
    logger.info(f"Generated synthetic data: n={spec.n}, m={spec.m}, c={spec.c}, rank={spec.rank}, "
                f"noise={spec.noise}, metas={spec.n_meta}, rho={spec.rho}, seed={spec.seed}")
    return MaskedDataset.build(
        raw,
        clusters,
        [f"class{k}" for k in range(spec.c)],
        metas,
        ground_truth=clean,
        name=f"synthetic_s{spec.seed}",
    )
