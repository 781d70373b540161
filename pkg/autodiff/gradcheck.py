"""Finite-difference verification of tape gradients."""

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from autodiff.tape import DiffNode, Tape
from constants import GRAD_CHECK_STEP, GRAD_CHECK_TOL
from errors import ContractError, DeterminismError

# Builds the loss on a fresh tape from the registered parameter leaves
LossClosure = Callable[[Tape, Mapping[str, DiffNode]], DiffNode]


@dataclass
class GradCheckReport:
    """Per-parameter maximum relative error between analytic and numeric gradients."""

    max_rel_error: dict[str, float]
    tol: float
    flagged: dict[str, list[tuple]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.flagged

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)


def _evaluate(closure: LossClosure, params: Mapping[str, np.ndarray], with_grad: bool):
    tape = Tape()
    nodes = {name: tape.parameter(value, name) for name, value in params.items()}
    loss = closure(tape, nodes)
    if loss.shape != (1, 1):
        raise ContractError(f"loss closure must return a 1x1 node, got {loss.shape}")
    grads = tape.backward(loss) if with_grad else None
    return float(loss.value[0, 0]), grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(1, |a|, |n|), entrywise."""
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / denom


def grad_check(
    closure: LossClosure,
    params: Mapping[str, np.ndarray],
    h: float = GRAD_CHECK_STEP,
    tol: float = GRAD_CHECK_TOL,
) -> GradCheckReport:
    """
    Compare tape gradients with central differences.

    Args:
        closure: Builds the scalar loss given a tape and parameter leaves
        params: Parameter values; perturbed copies are used, originals untouched
        h: Finite-difference step
        tol: Relative error above which an entry is flagged

    Returns:
        GradCheckReport

    Raises:
        ContractError: h is not positive
        DeterminismError: two evaluations at the same point differ
    """
    if h <= 0:
        raise ContractError(f"finite-difference step must be positive, got {h}")

    work = {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}
    base, analytic = _evaluate(closure, work, with_grad=True)
    again, _ = _evaluate(closure, work, with_grad=False)
    if base != again:
        raise DeterminismError(f"loss closure is not deterministic: {base!r} vs {again!r}")

    max_rel: dict[str, float] = {}
    flagged: dict[str, list[tuple]] = {}
    for name, value in work.items():
        numeric = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            original = value[idx]
            value[idx] = original + h
            plus, _ = _evaluate(closure, work, with_grad=False)
            value[idx] = original - h
            minus, _ = _evaluate(closure, work, with_grad=False)
            value[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * h)

        err = relative_error(analytic[name], numeric)
        max_rel[name] = float(err.max())
        bad = np.argwhere(err > tol)
        if len(bad):
            flagged[name] = [tuple(int(i) for i in idx) for idx in bad]

    return GradCheckReport(max_rel_error=max_rel, tol=tol, flagged=flagged)
