"""
Tests for synthetic data, label corruption, empirical noise rates and CSV I/O
Run with: python -m pytest tests/test_noise.py -v
"""
import numpy as np
import pytest

from class2simi.components.noise import (
    CsvSchema,
    LabeledDataset,
    corrupt_labels,
    csv_schema_for,
    empirical_class_noise_rate,
    empirical_simi_noise_rate,
    generate_blobs,
    load_csv,
    noise_report,
    train_val_split,
    write_csv,
)
from class2simi.errors import (
    DatasetError,
    DimensionMismatchError,
    InvalidLabelError,
    MissingCellError,
    NegativeLabelError,
    NonNumericCellError,
)
from class2simi.transition import make_identity, make_symmetric


@pytest.fixture(scope="module")
def noisy_blobs():
    """Balanced c=10 dataset with 10k points under symmetric 0.4 noise"""
    ds = generate_blobs(10, 1000, 2, 5.0, 1.0, seed=3)
    return corrupt_labels(ds, make_symmetric(10, 0.4), seed=11)


class TestGenerateBlobs:
    """Test Gaussian blob generation"""

    def test_small_dataset(self):
        """Test two tight far clusters"""
        ds = generate_blobs(2, 5, 2, 10.0, 0.1, seed=0)
        assert ds.n == 10
        assert ds.d == 2
        centers = [ds.features[ds.clean_labels == k].mean(axis=0) for k in range(2)]
        assert np.linalg.norm(centers[0] - centers[1]) > 15.0

    def test_class_balance(self):
        """Test every class has per_class points"""
        ds = generate_blobs(10, 100, 8, 5.0, 1.0, seed=3)
        assert ds.n == 1000
        np.testing.assert_array_equal(np.bincount(ds.clean_labels), np.full(10, 100))
        assert ds.noisy_labels is None

    def test_deterministic(self):
        """Test same seed gives bit-identical datasets"""
        a = generate_blobs(4, 20, 3, 5.0, 1.0, seed=9)
        b = generate_blobs(4, 20, 3, 5.0, 1.0, seed=9)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.clean_labels, b.clean_labels)

    def test_rejects_bad_arguments(self):
        """Test invalid generation arguments"""
        with pytest.raises(DatasetError):
            generate_blobs(1, 10, 2, 5.0, 1.0, seed=0)
        with pytest.raises(DatasetError):
            generate_blobs(3, 10, 2, -1.0, 1.0, seed=0)


class TestLabeledDataset:
    """Test dataset validation"""

    def test_label_range(self):
        """Test labels must lie in [0, c)"""
        with pytest.raises(InvalidLabelError):
            LabeledDataset(features=np.zeros((3, 2)), c=2, clean_labels=np.array([0, 1, 2]))

    def test_label_length(self):
        """Test label vector must match the row count"""
        with pytest.raises(DimensionMismatchError):
            LabeledDataset(features=np.zeros((3, 2)), c=2, clean_labels=np.array([0, 1]))

    def test_needs_some_labels(self):
        """Test dataset without labels is rejected"""
        with pytest.raises(DatasetError):
            LabeledDataset(features=np.zeros((3, 2)), c=2)

    def test_training_labels_prefer_noisy(self):
        """Test noisy labels drive training when present"""
        ds = LabeledDataset(features=np.zeros((2, 2)), c=2, clean_labels=[0, 1], noisy_labels=[1, 1])
        np.testing.assert_array_equal(ds.training_labels(), [1, 1])


class TestCorruption:
    """Test label corruption through a class transition matrix"""

    def test_identity_keeps_labels(self):
        """Test identity matrix leaves labels unchanged"""
        ds = generate_blobs(5, 50, 2, 5.0, 1.0, seed=1)
        noisy = corrupt_labels(ds, make_identity(5), seed=2)
        np.testing.assert_array_equal(noisy.noisy_labels, ds.clean_labels)

    def test_symmetric_flip_fraction(self, noisy_blobs):
        """Test empirical flip fraction is close to rho"""
        assert empirical_class_noise_rate(noisy_blobs) == pytest.approx(0.4, abs=0.02)

    def test_deterministic(self):
        """Test same seed gives identical noisy labels"""
        ds = generate_blobs(5, 50, 2, 5.0, 1.0, seed=1)
        Tc = make_symmetric(5, 0.3)
        np.testing.assert_array_equal(
            corrupt_labels(ds, Tc, seed=4).noisy_labels,
            corrupt_labels(ds, Tc, seed=4).noisy_labels,
        )

    def test_class_count_mismatch(self):
        """Test matrix must match the dataset class count"""
        ds = generate_blobs(3, 10, 2, 5.0, 1.0, seed=1)
        with pytest.raises(DimensionMismatchError):
            corrupt_labels(ds, make_identity(4), seed=0)


class TestEmpiricalRates:
    """Test measured noise rates"""

    def test_class_rate_hand_count(self):
        """Test two of four labels flipped"""
        ds = LabeledDataset(features=np.zeros((4, 2)), c=2, clean_labels=[0, 0, 1, 1], noisy_labels=[0, 1, 1, 0])
        assert empirical_class_noise_rate(ds) == pytest.approx(0.5)

    def test_clean_dataset_has_zero_rates(self):
        """Test identical label vectors give zero noise"""
        ds = LabeledDataset(features=np.zeros((4, 2)), c=3, clean_labels=[0, 1, 2, 1], noisy_labels=[0, 1, 2, 1])
        assert empirical_class_noise_rate(ds) == 0.0
        assert empirical_simi_noise_rate(ds, 100, seed=0) == 0.0

    def test_double_flip_keeps_similarity(self):
        """Test a pair flipped on both sides stays dissimilar"""
        ds = LabeledDataset(features=np.zeros((2, 2)), c=2, clean_labels=[0, 1], noisy_labels=[1, 0])
        assert empirical_class_noise_rate(ds) == 1.0
        assert empirical_simi_noise_rate(ds, 10, seed=0) == 0.0

    def test_simi_rate_matches_analytic(self, noisy_blobs):
        """Test pair noise rate is near the analytic 0.124444"""
        rate = empirical_simi_noise_rate(noisy_blobs, 1_000_000, seed=5)
        assert rate == pytest.approx(0.124444, abs=0.01)

    def test_requires_both_label_sets(self):
        """Test rates need clean and noisy labels"""
        ds = generate_blobs(2, 5, 2, 5.0, 1.0, seed=0)
        with pytest.raises(DatasetError):
            empirical_class_noise_rate(ds)

    def test_noise_report(self, noisy_blobs):
        """Test report lists analytic and measured rates"""
        report = noise_report(noisy_blobs, make_symmetric(10, 0.4), max_pairs=200_000, seed=1)
        assert report["analytic_class_noise_rate"] == pytest.approx(0.4)
        assert report["analytic_simi_noise_rate"] == pytest.approx(0.124444, abs=1e-6)
        assert report["empirical_class_noise_rate"] == pytest.approx(0.4, abs=0.02)


class TestTrainValSplit:
    """Test validation split"""

    def test_sizes_and_disjointness(self):
        """Test split sizes and that every row lands in exactly one side"""
        ds = generate_blobs(4, 25, 2, 5.0, 1.0, seed=0)
        train, val = train_val_split(ds, 0.1, seed=0)
        assert train.n == 90
        assert val.n == 10
        rows = {tuple(row) for row in np.vstack([train.features, val.features])}
        assert len(rows) == 100

    def test_seeded(self):
        """Test the split depends only on the seed"""
        ds = generate_blobs(4, 25, 2, 5.0, 1.0, seed=0)
        first, _ = train_val_split(ds, 0.2, seed=3)
        again, _ = train_val_split(ds, 0.2, seed=3)
        other, _ = train_val_split(ds, 0.2, seed=4)
        np.testing.assert_array_equal(first.features, again.features)
        assert not np.array_equal(first.features, other.features)

    def test_rejects_bad_fraction(self):
        """Test fraction must lie in (0, 1)"""
        ds = generate_blobs(2, 5, 2, 5.0, 1.0, seed=0)
        with pytest.raises(DatasetError):
            train_val_split(ds, 1.0, seed=0)


class TestCsv:
    """Test CSV ingestion and export"""

    def _write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return path

    def test_well_formed_file(self, tmp_path):
        """Test a 3-row file with header"""
        path = self._write(tmp_path, "a,b,label\n0.1,0.2,0\n1.5,2.5,1\n-3,4,2\n")
        ds = load_csv(path)
        assert ds.n == 3
        assert ds.d == 2
        assert ds.c == 3
        np.testing.assert_array_equal(ds.clean_labels, [0, 1, 2])

    def test_without_header(self, tmp_path):
        """Test headerless file keeps its first row"""
        path = self._write(tmp_path, "0.1,0.2,0\n1.5,2.5,1\n")
        ds = load_csv(path, CsvSchema(has_header=False))
        assert ds.n == 2

    def test_missing_cell_names_row(self, tmp_path):
        """Test empty cell raises with the file row"""
        path = self._write(tmp_path, "a,b,label\n0.1,0.2,0\n1.5,,1\n")
        with pytest.raises(MissingCellError) as exc_info:
            load_csv(path)
        assert exc_info.value.row == 3
        assert "row 3" in exc_info.value.message

    def test_non_numeric_feature(self, tmp_path):
        """Test non-numeric feature cell"""
        path = self._write(tmp_path, "a,b,label\n0.1,abc,0\n")
        with pytest.raises(NonNumericCellError) as exc_info:
            load_csv(path)
        assert exc_info.value.row == 2

    def test_negative_label(self, tmp_path):
        """Test labels must be non-negative"""
        path = self._write(tmp_path, "a,b,label\n0.1,0.2,0\n0.3,0.4,-1\n")
        with pytest.raises(NegativeLabelError):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        """Test absent file"""
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "absent.csv")

    def test_write_then_load(self, tmp_path):
        """Test exported CSV loads back with both label columns"""
        ds = corrupt_labels(generate_blobs(3, 10, 2, 5.0, 1.0, seed=0), make_symmetric(3, 0.2), seed=1)
        path = write_csv(ds, tmp_path / "out.csv")
        loaded = load_csv(path, csv_schema_for(path))
        np.testing.assert_allclose(loaded.features, ds.features, atol=1e-9)
        np.testing.assert_array_equal(loaded.clean_labels, ds.clean_labels)
        np.testing.assert_array_equal(loaded.noisy_labels, ds.noisy_labels)

    def test_write_then_load_is_exact(self, tmp_path):
        """Test exported features reload bit for bit"""
        ds = generate_blobs(3, 10, 4, 5.0, 1.5, seed=7)
        path = write_csv(ds, tmp_path / "exact.csv")
        loaded = load_csv(path, csv_schema_for(path))
        np.testing.assert_array_equal(loaded.features, ds.features)
