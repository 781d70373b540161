"""
Dense reverse-mode differentiation.

Every model component is written against these primitives:
- tape: Matrix validation, DiffNode, Tape
- ops: matmul, entrywise kinds, reductions, softmax, column partitions
- gradcheck: central-difference verification
"""

from .tape import DiffNode, Matrix, Tape, as_matrix
from .gradcheck import GradCheckReport, grad_check

__all__ = ["DiffNode", "Matrix", "Tape", "as_matrix", "GradCheckReport", "grad_check"]
