"""
MGMC network components.

- spectral: Chebyshev graph convolution
- recurrent: LSTM cell and the unrolled per-graph branch
- fusion: self-attention combination of branch outputs
- objective: masked multi-graph loss
- mgmc: model assembly, prediction, persistence
"""

from .mgmc import MgmcModel, ModelSpec, Prediction
from .objective import LossWeights, MaskPair, mgmc_loss, mgmc_terms

__all__ = ["MgmcModel", "ModelSpec", "Prediction", "LossWeights", "MaskPair", "mgmc_loss", "mgmc_terms"]
