"""Tests for dataset ingestion, splits, availability masking and synthetic data."""

import json
from pathlib import Path
import sys

import numpy as np
import pytest
from scipy.stats import chisquare

sys.path.insert(0, str(Path(__file__).parent.parent))

from cohort.dataset import MaskedDataset
from cohort.loader import DatasetSchema, load_csv, write_dataset
from cohort.masking import apply_availability
from cohort.splits import allocate, assign_splits
from cohort.synthetic import SyntheticSpec, generate_synthetic
from errors import ConfigError, ContractError, DataError, IngestionError, SchemaError
from graphs.population import MetaFeature, build_graphs

SCHEMA = {
    "label": "dx",
    "columns": [
        {"name": "f0", "role": "feature"},
        {"name": "f1", "role": "feature"},
        {"name": "age", "role": "meta", "threshold": 2.0},
        {"name": "site", "role": "meta", "categorical": True},
        {"name": "dx", "role": "label"},
    ],
}


def _write(tmp_path, text, schema=SCHEMA):
    csv_path = tmp_path / "cohort.csv"
    csv_path.write_text(text)
    schema_path = tmp_path / "cohort.schema.json"
    schema_path.write_text(json.dumps(schema))
    return csv_path, schema_path


def _balanced(n=100, c=2):
    labels = np.arange(n) % c
    raw = np.random.default_rng(0).normal(size=(n, 3))
    return MaskedDataset.build(raw, labels, [f"k{i}" for i in range(c)], [])


class TestLoadCsv:
    """CSV ingestion."""

    def test_missing_cell_and_standardization(self, tmp_path):
        """One empty cell gives one unobserved entry; observed columns standardize to mean 0."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,,71,B,B\n5,6,80,A,A\n")
        ds = load_csv(csv_path, schema_path)
        assert (~ds.observed).sum() == 1
        assert not ds.observed[1, 1]
        mean = np.array([ds.features[ds.observed[:, j], j].mean() for j in range(ds.m)])
        assert np.allclose(mean, 0.0, atol=1e-12)

    def test_label_encoding(self, tmp_path):
        """Labels [A, B, A] map to A -> 0, B -> 1 with a 3 x 2 one-hot."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,4,71,B,B\n5,6,80,A,A\n")
        ds = load_csv(csv_path, schema_path)
        assert ds.class_names == ("A", "B")
        assert ds.labels.tolist() == [0, 1, 0]
        assert ds.onehot.shape == (3, 2)

    def test_declared_classes_fix_order(self, tmp_path):
        """Declared classes set the index order."""
        schema = {**SCHEMA, "classes": ["B", "A"]}
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,4,71,B,B\n", schema)
        assert load_csv(csv_path, schema_path).labels.tolist() == [1, 0]

    def test_meta_features(self, tmp_path):
        """Numeric metas keep values; categorical metas become codes."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,X,A\n3,4,71,Y,B\n5,6,80,X,A\n")
        ds = load_csv(csv_path, schema_path)
        age, site = ds.metas
        assert age.values.tolist() == [70.0, 71.0, 80.0]
        assert site.categorical
        assert site.values.tolist() == [0.0, 1.0, 0.0]
        assert [g.edge_count for g in build_graphs(ds.metas)] == [1, 1]

    def test_extra_columns_ignored(self, tmp_path):
        """Columns absent from the schema are skipped."""
        csv_path, schema_path = _write(tmp_path, "id,f0,f1,age,site,dx\nx,1,2,70,A,A\ny,3,4,71,B,B\n")
        assert load_csv(csv_path, schema_path).m == 2

    def test_non_numeric_feature(self, tmp_path):
        """Non-numeric feature cells report their line."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,abc,71,B,B\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(csv_path, schema_path)

    def test_missing_label(self, tmp_path):
        """A row without a label cannot be ingested."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,4,71,B,\n")
        with pytest.raises(IngestionError):
            load_csv(csv_path, schema_path)

    def test_schema_column_missing_from_file(self, tmp_path):
        """Every schema column must be in the header."""
        csv_path, schema_path = _write(tmp_path, "f0,age,site,dx\n1,70,A,A\n3,71,B,B\n")
        with pytest.raises(SchemaError):
            load_csv(csv_path, schema_path)

    def test_single_class(self, tmp_path):
        """A dataset needs two classes."""
        csv_path, schema_path = _write(tmp_path, "f0,f1,age,site,dx\n1,2,70,A,A\n3,4,71,B,A\n")
        with pytest.raises(DataError):
            load_csv(csv_path, schema_path)

    def test_empty_file(self, tmp_path):
        """An empty file is a data error."""
        csv_path, schema_path = _write(tmp_path, "")
        with pytest.raises(DataError):
            load_csv(csv_path, schema_path)

    def test_wide_file(self, tmp_path):
        """A 813 x 435 feature file is accepted."""
        rng = np.random.default_rng(0)
        names = [f"f{j}" for j in range(435)]
        schema = {"label": "dx", "columns": [{"name": n, "role": "feature"} for n in names]
                  + [{"name": "dx", "role": "label"}]}
        values = rng.normal(size=(813, 435))
        lines = [",".join(names + ["dx"])]
        lines += [",".join(f"{v:.6f}" for v in row) + f",{'AB'[i % 2]}" for i, row in enumerate(values)]
        csv_path, schema_path = _write(tmp_path, "\n".join(lines) + "\n", schema)
        ds = load_csv(csv_path, schema_path)
        assert (ds.n, ds.m) == (813, 435)

    def test_write_then_load(self, tmp_path):
        """Exported synthetic data reloads with the same observed values and classes."""
        ds = apply_availability(generate_synthetic(SyntheticSpec(n=20, m=4, n_meta=2, seed=3)), 0.5, 3)
        paths = write_dataset(ds, tmp_path)
        assert set(paths) == {"csv", "schema", "truth"}
        loaded = load_csv(paths["csv"], paths["schema"])
        assert np.array_equal(loaded.observed, ds.observed)
        assert np.array_equal(loaded.raw[ds.observed], ds.raw[ds.observed])
        assert loaded.class_names == ds.class_names
        for a, b in zip(build_graphs(loaded.metas), build_graphs(ds.metas)):
            assert np.array_equal(a.adjacency, b.adjacency)


class TestSchema:
    """Schema validation."""

    def test_duplicate_column(self):
        """A column may be declared once."""
        data = {"label": "y", "columns": [{"name": "a", "role": "feature"}, {"name": "a", "role": "feature"},
                                          {"name": "y", "role": "label"}]}
        with pytest.raises(SchemaError):
            DatasetSchema.from_dict(data)

    def test_invalid_role(self):
        """Roles are feature, meta or label."""
        data = {"columns": [{"name": "a", "role": "target"}]}
        with pytest.raises(SchemaError):
            DatasetSchema.from_dict(data)

    def test_no_features(self):
        """At least one feature column is required."""
        with pytest.raises(SchemaError):
            DatasetSchema.from_dict({"columns": [{"name": "y", "role": "label"}]})

    def test_round_trip(self):
        """to_dict reproduces an equivalent schema."""
        schema = DatasetSchema.from_dict(SCHEMA)
        assert DatasetSchema.from_dict(schema.to_dict()) == schema


class TestSplits:
    """Stratified assignment."""

    def test_proportions(self):
        """n = 100 gives 10 test, 9 validation and 81 training rows."""
        ds = assign_splits(_balanced(), 0)
        assert ds.test_rows.sum() == 10
        assert ds.val_rows.sum() == 9
        assert ds.train_rows.sum() == 81

    def test_deterministic(self):
        """The same seed gives the same split."""
        assert np.array_equal(assign_splits(_balanced(), 4).split, assign_splits(_balanced(), 4).split)

    def test_stratified(self):
        """Each class's test count is within one member of 10%."""
        ds = assign_splits(_balanced(n=157, c=3), 2)
        for k in range(3):
            members = ds.labels == k
            assert abs(ds.test_rows[members].sum() - 0.1 * members.sum()) <= 1

    def test_too_few_rows(self):
        """Fewer than 10 rows cannot be split."""
        with pytest.raises(ContractError):
            assign_splits(_balanced(n=9), 0)

    def test_allocate_largest_remainder(self):
        """Leftover units go to the largest fractional shares."""
        assert allocate(10, [50, 30, 20]) == [5, 3, 2]
        assert allocate(3, [5, 5, 1]) == [2, 1, 0]
        assert sum(allocate(7, [3, 3, 3])) == 7

    def test_standardization_uses_train_rows(self):
        """After a split, column statistics come from training rows only."""
        ds = assign_splits(_balanced(), 1)
        train = ds.train_rows
        assert np.allclose(ds.features[train].mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(ds.features[train].std(axis=0), 1.0)


class TestAvailability:
    """Artificial masking."""

    def test_full_availability(self):
        """Level 1.0 keeps everything and holds out nothing."""
        ds = apply_availability(_balanced(), 1.0, 0)
        assert np.array_equal(ds.observed, ds.baseline_observed)
        assert not ds.held_out.any()

    def test_exact_count(self):
        """400 observed entries at 0.75 keep exactly 300."""
        raw = np.random.default_rng(0).normal(size=(100, 4))
        ds = MaskedDataset.build(raw, np.arange(100) % 2, ["a", "b"], [])
        assert apply_availability(ds, 0.75, 1).observed.sum() == 300

    def test_levels_are_nested(self):
        """For a fixed seed lower levels keep subsets of higher levels."""
        ds = _balanced()
        masks = [apply_availability(ds, level, 7).observed for level in (1.0, 0.75, 0.5, 0.25)]
        for higher, lower in zip(masks, masks[1:]):
            assert not (lower & ~higher).any()

    def test_only_observed_entries_removed(self):
        """Entries missing at baseline stay missing and are not held out."""
        raw = np.random.default_rng(1).normal(size=(20, 3))
        raw[0, 0] = np.nan
        ds = apply_availability(MaskedDataset.build(raw, np.arange(20) % 2, ["a", "b"], []), 0.5, 0)
        assert not ds.observed[0, 0]
        assert not ds.held_out[0, 0]
        assert ds.observed.sum() == 29

    def test_removal_is_uniform_over_columns(self):
        """Removed entries spread evenly over columns."""
        raw = np.random.default_rng(2).normal(size=(1000, 10))
        ds = apply_availability(MaskedDataset.build(raw, np.arange(1000) % 2, ["a", "b"], []), 0.5, 3)
        counts = ds.held_out.sum(axis=0)
        assert chisquare(counts).pvalue > 0.01

    @pytest.mark.parametrize("level", [0.0, 1.5])
    def test_invalid_level(self, level):
        """Levels must lie in (0, 1]."""
        with pytest.raises(ContractError):
            apply_availability(_balanced(), level, 0)

    def test_observed_must_be_subset(self):
        """The current mask cannot exceed the baseline."""
        raw = np.array([[1.0, np.nan], [2.0, 3.0]])
        ds = MaskedDataset.build(raw, [0, 1], ["a", "b"], [])
        with pytest.raises(ContractError):
            ds.with_observed(np.ones((2, 2), dtype=bool), 1.0)


class TestSynthetic:
    """Clustered low-rank generator."""

    def test_shapes_and_ground_truth(self):
        """Defaults give 300 x 40 with 3 classes and 3 metas."""
        ds = generate_synthetic(SyntheticSpec())
        assert (ds.n, ds.m, ds.c, len(ds.metas)) == (300, 40, 3, 3)
        assert ds.ground_truth.shape == (300, 40)
        assert ds.observed.all()

    def test_noise_free_rank(self):
        """sigma = 0 gives numerical rank at most r * c."""
        ds = generate_synthetic(SyntheticSpec(n=60, m=20, c=3, rank=2, noise=0.0))
        singular = np.linalg.svd(ds.raw, compute_uv=False)
        assert (singular[6:] < 1e-9).all()

    def test_perfect_metas_form_cliques(self):
        """rho = 1 makes every meta graph a union of c cliques aligned with labels."""
        ds = generate_synthetic(SyntheticSpec(n=30, m=5, c=3, noise=0.0, rho=1.0, n_meta=2))
        same = (ds.labels[:, None] == ds.labels[None, :]).astype(float)
        np.fill_diagonal(same, 0.0)
        for graph in build_graphs(ds.metas):
            assert np.array_equal(graph.adjacency, same)

    def test_uninformative_metas(self):
        """rho = 1/c leaves metas at chance agreement with labels."""
        ds = generate_synthetic(SyntheticSpec(n=3000, m=2, c=3, rho=1 / 3, n_meta=1))
        agreement = np.mean(ds.metas[0].values == ds.labels)
        assert agreement == pytest.approx(1 / 3, abs=0.03)

    def test_deterministic(self):
        """The same seed gives the same data."""
        a, b = generate_synthetic(SyntheticSpec(seed=5)), generate_synthetic(SyntheticSpec(seed=5))
        assert np.array_equal(a.raw, b.raw)

    @pytest.mark.parametrize("changes", [{"c": 1}, {"rank": 0}, {"noise": -1.0}, {"rho": 1.5}])
    def test_invalid_spec(self, changes):
        """Out-of-range settings raise ConfigError."""
        with pytest.raises(ConfigError):
            SyntheticSpec(**changes)
