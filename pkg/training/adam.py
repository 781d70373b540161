"""Adam with bias correction over named float64 parameters."""

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON
from errors import ContractError, DimensionError, NumericError


@dataclass
class AdamState:
    """First/second moment estimates per parameter plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
    epoch: Optional[int] = None,
) -> dict[str, np.ndarray]:
    """
    Apply one update in place and return params.

    Parameters without a gradient entry are treated as having zero gradient.

    Raises:
        NumericError: a gradient contains NaN or Inf (message carries the epoch)
    """
    if lr <= 0:
        raise ContractError(f"learning rate must be positive, got {lr}")
    where = f" at epoch {epoch}" if epoch is not None else ""
    for name, g in grads.items():
        if name in params and g.shape != params[name].shape:
            raise DimensionError(f"gradient for '{name}' has shape {g.shape}, parameter {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for '{name}'{where}")

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    step_size = lr / bc1

    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)

        state.m[name] *= state.beta1
        state.m[name] += (1.0 - state.beta1) * g
        state.v[name] *= state.beta2
        state.v[name] += (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(state.v[name] / bc2) + state.epsilon
        value -= step_size * state.m[name] / denom
    return params
