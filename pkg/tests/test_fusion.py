"""Tests for attention fusion."""

from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from autodiff import ops
from autodiff.gradcheck import grad_check
from autodiff.tape import Tape
from errors import ConfigError, ContractError, DimensionError
from model.fusion import FusionHead, fuse


def _run(head, outputs, seed=0):
    tape = Tape()
    values = head.init_params(np.random.default_rng(seed))
    params = {name: tape.parameter(v, name) for name, v in values.items()}
    nodes = [tape.constant(z) for z in outputs]
    fused, alpha = fuse(head, params, nodes)
    return fused.value, alpha.value


MODES = [("additive", "row"), ("additive", "global"), ("query_key", "row"), ("query_key", "global")]


class TestFuse:
    """Convex combination of branch outputs."""

    @pytest.mark.parametrize("mode,scope", MODES)
    def test_single_branch(self, mode, scope):
        """One branch: alpha = 1 and the output is the branch itself."""
        z = np.random.default_rng(1).normal(size=(5, 4))
        fused, alpha = _run(FusionHead(in_dim=4, a_dim=3, mode=mode, scope=scope), [z])
        assert np.array_equal(alpha, np.ones((5, 1)))
        assert np.array_equal(fused, z)

    @pytest.mark.parametrize("mode,scope", MODES)
    def test_identical_branches(self, mode, scope):
        """Identical outputs split attention evenly and return that output."""
        z = np.random.default_rng(2).normal(size=(5, 4))
        fused, alpha = _run(FusionHead(in_dim=4, a_dim=3, mode=mode, scope=scope), [z, z])
        assert np.allclose(alpha, 0.5, atol=1e-12)
        assert np.allclose(fused, z, atol=1e-12)

    @pytest.mark.parametrize("mode,scope", MODES)
    def test_rows_are_convex_combinations(self, mode, scope):
        """Weights are a distribution per row; outputs stay between branch extremes."""
        rng = np.random.default_rng(3)
        outputs = [rng.normal(size=(6, 4)) for _ in range(3)]
        fused, alpha = _run(FusionHead(in_dim=4, a_dim=5, mode=mode, scope=scope), outputs)
        stacked = np.stack(outputs)
        assert alpha.shape == (6, 3)
        assert (alpha >= 0).all()
        assert np.allclose(alpha.sum(axis=1), 1.0)
        assert (fused >= stacked.min(axis=0) - 1e-12).all()
        assert (fused <= stacked.max(axis=0) + 1e-12).all()

    @pytest.mark.parametrize("mode", ["additive", "query_key"])
    def test_global_scope_shares_weights(self, mode):
        """Global scope gives every row the same weights."""
        rng = np.random.default_rng(4)
        outputs = [rng.normal(size=(6, 4)) for _ in range(2)]
        _, alpha = _run(FusionHead(in_dim=4, a_dim=3, mode=mode, scope="global"), outputs)
        assert np.allclose(alpha, alpha[0])

    @pytest.mark.parametrize("mode,scope", MODES)
    def test_branch_order_does_not_matter(self, mode, scope):
        """Reordering branches permutes alpha's columns and leaves the fused output unchanged."""
        rng = np.random.default_rng(5)
        outputs = [rng.normal(size=(6, 4)) for _ in range(3)]
        order = [2, 0, 1]
        head = FusionHead(in_dim=4, a_dim=3, mode=mode, scope=scope)
        fused, alpha = _run(head, outputs)
        fused_perm, alpha_perm = _run(head, [outputs[i] for i in order])
        assert np.allclose(fused_perm, fused, atol=1e-12)
        assert np.allclose(alpha_perm, alpha[:, order], atol=1e-12)

    def test_additive_gradients(self):
        """Gradients w.r.t. W_a and v pass a finite-difference check."""
        rng = np.random.default_rng(5)
        head = FusionHead(in_dim=3, a_dim=4)
        outputs = [rng.normal(size=(5, 3)) for _ in range(2)]
        weights = rng.normal(size=(5, 3))

        def closure(tape, p):
            fused, _ = fuse(head, p, [tape.constant(z) for z in outputs])
            return ops.reduce_sum(ops.hadamard_const(fused, weights))

        report = grad_check(closure, head.init_params(rng), tol=1e-5)
        assert report.ok, report.max_rel_error

    def test_query_key_gradients(self):
        """Gradients w.r.t. W_q and W_k pass a finite-difference check."""
        rng = np.random.default_rng(6)
        head = FusionHead(in_dim=3, a_dim=2, mode="query_key")
        outputs = [rng.normal(size=(4, 3)) for _ in range(3)]
        weights = rng.normal(size=(4, 3))

        def closure(tape, p):
            fused, _ = fuse(head, p, [tape.constant(z) for z in outputs])
            return ops.reduce_sum(ops.hadamard_const(fused, weights))

        report = grad_check(closure, head.init_params(rng), tol=1e-5)
        assert report.ok, report.max_rel_error


class TestFusionErrors:
    """Argument validation."""

    def test_invalid_mode(self):
        """Unknown modes raise ConfigError."""
        with pytest.raises(ConfigError):
            FusionHead(in_dim=3, mode="max")

    def test_no_branches(self):
        """At least one branch is required."""
        head = FusionHead(in_dim=3)
        with pytest.raises(ContractError):
            fuse(head, {}, [])

    def test_mismatched_shapes(self):
        """Branch outputs must share a shape."""
        head = FusionHead(in_dim=3)
        tape = Tape()
        params = {n: tape.parameter(v, n) for n, v in head.init_params(np.random.default_rng(0)).items()}
        with pytest.raises(DimensionError):
            fuse(head, params, [tape.constant(np.ones((2, 3))), tape.constant(np.ones((3, 3)))])
