"""Tests for the masked multi-graph objective."""

import math
from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from autodiff.tape import Tape
from errors import ConfigError, ContractError, DimensionError
from model.objective import (
    LossWeights,
    MaskPair,
    cross_entropy_value,
    dirichlet,
    masked_cross_entropy,
    masked_frobenius,
    mgmc_loss,
    mgmc_terms,
)

PATH_L = np.array([[1.0, -1.0], [-1.0, 1.0]])


def _value(node) -> float:
    return float(node.value[0, 0])


class TestDirichlet:
    """tr(Zbar^T L Zbar)."""

    def test_constant_column_is_zero(self):
        """Constants lie in the nullspace of a connected graph's L."""
        tape = Tape()
        assert _value(dirichlet(tape.constant([[1.0], [1.0]]), PATH_L)) == pytest.approx(0.0, abs=1e-10)

    def test_alternating_column(self):
        """Zbar = [[1], [-1]] gives 4."""
        tape = Tape()
        assert _value(dirichlet(tape.constant([[1.0], [-1.0]]), PATH_L)) == pytest.approx(4.0)

    def test_edgeless_graph(self):
        """L = 0 gives 0 for any input."""
        tape = Tape()
        z = tape.constant(np.random.default_rng(0).normal(size=(3, 2)))
        assert _value(dirichlet(z, np.zeros((3, 3)))) == 0.0

    def test_matches_trace(self):
        """Equals tr(Z^T L Z) for a dense random case."""
        rng = np.random.default_rng(1)
        a = rng.normal(size=(5, 5))
        lap = a @ a.T
        z = rng.normal(size=(5, 3))
        tape = Tape()
        assert _value(dirichlet(tape.constant(z), lap)) == pytest.approx(np.trace(z.T @ lap @ z))

    def test_shape_mismatch(self):
        """The Laplacian must match the row count."""
        tape = Tape()
        with pytest.raises(DimensionError):
            dirichlet(tape.constant(np.ones((3, 1))), PATH_L)


class TestMaskedFrobenius:
    """Observed-entry reconstruction error."""

    def test_equal_is_zero(self):
        """Zbar = Z gives 0."""
        tape = Tape()
        z = np.arange(4.0).reshape(2, 2)
        assert _value(masked_frobenius(tape.constant(z), z, np.ones((2, 2)))) == 0.0

    def test_empty_mask_is_zero(self):
        """Omega_x = 0 gives 0 for any Zbar."""
        tape = Tape()
        assert _value(masked_frobenius(tape.constant(np.ones((2, 2))), np.zeros((2, 2)), np.zeros((2, 2)))) == 0.0

    def test_hand_example(self):
        """Zbar - Z = [[1, 2], [0, 1]] under the identity mask gives 2."""
        tape = Tape()
        z = np.zeros((2, 2))
        zbar = tape.constant([[1.0, 2.0], [0.0, 1.0]])
        assert _value(masked_frobenius(zbar, z, np.eye(2))) == 2.0

    def test_rejects_nonbinary_mask(self):
        """Masks must be 0/1."""
        tape = Tape()
        with pytest.raises(ContractError):
            masked_frobenius(tape.constant(np.ones((1, 1))), np.zeros((1, 1)), np.full((1, 1), 0.5))


class TestMaskedCrossEntropy:
    """Mean cross-entropy over labeled rows."""

    def test_uniform_logits(self):
        """Zero logits over 3 classes give ln 3."""
        tape = Tape()
        z = np.array([[0.0, 1.0, 0.0, 0.0]])
        omega_y = np.array([[0.0, 1.0, 1.0, 1.0]])
        loss = masked_cross_entropy(tape.constant(np.zeros((1, 4))), z, omega_y, 1)
        assert _value(loss) == pytest.approx(math.log(3), abs=1e-12)

    def test_confident_correct(self):
        """A large correct logit drives the loss toward 0."""
        tape = Tape()
        zhat = tape.constant([[50.0, 0.0, 0.0]])
        loss = masked_cross_entropy(zhat, np.array([[1.0, 0.0, 0.0]]), np.ones((1, 3)), 0)
        assert 0.0 <= _value(loss) < 1e-20

    def test_mean_over_labeled_rows(self):
        """Two labeled rows average; the unlabeled row is ignored."""
        rng = np.random.default_rng(2)
        logits = rng.normal(size=(3, 2))
        z = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        omega_y = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
        tape = Tape()
        loss = masked_cross_entropy(tape.constant(logits), z, omega_y, 0)

        def row_loss(row, label):
            return -(row[label] - np.log(np.exp(row).sum()))

        expected = (row_loss(logits[0], 0) + row_loss(logits[1], 1)) / 2
        assert _value(loss) == pytest.approx(expected, abs=1e-12)
        assert cross_entropy_value(logits[:2], np.array([0, 1])) == pytest.approx(expected, abs=1e-12)

    def test_no_labeled_rows(self):
        """Cross-entropy needs at least one labeled row."""
        tape = Tape()
        with pytest.raises(ContractError):
            masked_cross_entropy(tape.constant(np.zeros((2, 3))), np.zeros((2, 3)), np.zeros((2, 3)), 1)


def _toy_instance(seed=0):
    """8 rows, 5 features, 2 classes, 2 graphs; rows 0-5 labeled."""
    rng = np.random.default_rng(seed)
    n, m, c = 8, 5, 2
    labels = rng.integers(0, c, size=n)
    omega_x = np.zeros((n, m + c))
    omega_x[:, :m] = rng.random((n, m)) < 0.7
    omega_y = np.zeros((n, m + c))
    omega_y[:6, m:] = 1.0
    z = np.zeros((n, m + c))
    z[:, :m] = rng.normal(size=(n, m)) * omega_x[:, :m]
    z[np.arange(6), m + labels[:6]] = 1.0
    laplacians = []
    for _ in range(2):
        a = (rng.random((n, n)) < 0.4).astype(float)
        a = np.triu(a, 1)
        a = a + a.T
        laplacians.append(np.diag(a.sum(axis=1)) - a)
    outputs = [rng.normal(size=(n, m + c)) for _ in range(2)]
    zhat = rng.normal(size=(n, m + c))
    return MaskPair(omega_x, omega_y, m), z, laplacians, outputs, zhat


class TestMgmcTerms:
    """Weighted total."""

    def test_total_equals_sum_of_terms(self):
        """Total matches the independently computed terms."""
        masks, z, laps, outputs, zhat = _toy_instance()
        weights = LossWeights(0.5, 2.0, 3.0)
        tape = Tape()
        terms = mgmc_terms([tape.constant(o) for o in outputs], tape.constant(zhat), z, masks, laps, weights)

        dir_sum = sum(np.trace(o.T @ lap @ o) for o, lap in zip(outputs, laps))
        fro_sum = sum(np.sum((masks.omega_x * (o - z)) ** 2) for o in outputs)
        labels = z[:6, 5:].argmax(axis=1)
        ce = cross_entropy_value(zhat[:6, 5:], labels)
        expected = 0.25 * dir_sum + 1.0 * fro_sum + 3.0 * ce

        values = terms.values()
        assert values["dirichlet"] == pytest.approx(dir_sum, abs=1e-12)
        assert values["frobenius"] == pytest.approx(fro_sum, abs=1e-12)
        assert values["ce"] == pytest.approx(ce, abs=1e-12)
        assert values["total"] == pytest.approx(expected, abs=1e-12)

    def test_classification_only(self):
        """gamma_a = gamma_b = 0 leaves gamma_c * CE."""
        masks, z, laps, outputs, zhat = _toy_instance(1)
        tape = Tape()
        loss = mgmc_loss([tape.constant(o) for o in outputs], tape.constant(zhat), z, masks, laps,
                         LossWeights(0.0, 0.0, 2.0))
        ce = cross_entropy_value(zhat[:6, 5:], z[:6, 5:].argmax(axis=1))
        assert _value(loss) == pytest.approx(2.0 * ce, abs=1e-12)

    def test_zero_weight_removes_gradient(self):
        """A zero-weighted term contributes no gradient to its inputs."""
        masks, z, laps, outputs, zhat = _toy_instance(2)
        tape = Tape()
        branch = tape.parameter(outputs[0], "branch")
        fused = tape.parameter(zhat, "fused")
        loss = mgmc_loss([branch], fused, z, masks, laps[:1], LossWeights(0.0, 0.0, 1.0))
        grads = tape.backward(loss)
        assert not grads["branch"].any()
        assert grads["fused"][:, 5:].any()

    def test_single_graph_completion(self):
        """One branch, gamma_c = 0 and no labeled rows is plain graph completion."""
        rng = np.random.default_rng(3)
        omega_x = np.zeros((4, 3))
        omega_x[:, :2] = 1.0
        masks = MaskPair(omega_x, np.zeros((4, 3)), 2)
        z = np.zeros((4, 3))
        z[:, :2] = rng.normal(size=(4, 2))
        zbar = rng.normal(size=(4, 3))
        lap = np.eye(4)
        tape = Tape()
        node = tape.constant(zbar)
        terms = mgmc_terms([node], node, z, masks, [lap], LossWeights(1.0, 1.0, 0.0))
        expected = 0.5 * np.sum(zbar * zbar) + 0.5 * np.sum((omega_x * (zbar - z)) ** 2)
        assert terms.ce is None
        assert _value(terms.total) == pytest.approx(expected, abs=1e-12)

    def test_gamma_c_without_labels(self):
        """A positive gamma_c needs labeled rows."""
        masks = MaskPair(np.zeros((2, 3)), np.zeros((2, 3)), 2)
        tape = Tape()
        node = tape.constant(np.zeros((2, 3)))
        with pytest.raises(ContractError):
            mgmc_terms([node], node, np.zeros((2, 3)), masks, [np.zeros((2, 2))], LossWeights())


class TestMaskPair:
    """Mask validation."""

    def test_overlapping_supports(self):
        """Omega_x and Omega_y must be disjoint."""
        with pytest.raises(ContractError):
            MaskPair(np.ones((2, 3)), np.ones((2, 3)), 2)

    def test_feature_mask_on_label_columns(self):
        """Omega_x is zero on label columns."""
        omega_x = np.zeros((2, 3))
        omega_x[0, 2] = 1.0
        with pytest.raises(ContractError):
            MaskPair(omega_x, np.zeros((2, 3)), 2)

    def test_all_zero_weights(self):
        """At least one weight must be positive."""
        with pytest.raises(ConfigError):
            LossWeights(0.0, 0.0, 0.0)
