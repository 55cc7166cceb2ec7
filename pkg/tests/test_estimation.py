"""
Tests for anchor-point estimation of the class transition matrix
Run with: python -m pytest tests/test_estimation.py -v
"""
import numpy as np
import pytest

from class2simi.components.estimation import (
    BlobPosterior,
    anchor_indices,
    estimate_tc_anchor,
    estimate_ts,
    estimation_error,
)
from class2simi.components.noise import generate_blobs
from class2simi.errors import EstimationError
from class2simi.transition import class2simi, make_asymmetric, make_identity, make_symmetric


class _FixedPosterior:
    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def predict_proba(self, X):
        return self.probs


@pytest.fixture(scope="module")
def pool():
    """5000 points from well-separated blobs, c=10"""
    return generate_blobs(10, 500, 8, 10.0, 1.0, seed=0).features


class TestAnchorEstimation:
    """Test estimate_tc_anchor against an exact noisy posterior"""

    def test_recovers_symmetric_noise(self, pool):
        """Test hard-argmax anchors read off the true rows"""
        Tc = make_symmetric(10, 0.4)
        g = BlobPosterior.for_blobs(10, 8, 10.0, 1.0, Tc)
        Tc_hat = estimate_tc_anchor(g, pool, percentile=100)
        assert estimation_error(Tc_hat, Tc) < 0.05

    def test_clean_posterior_gives_identity(self, pool):
        """Test clean labels give a near-identity estimate"""
        g = BlobPosterior.for_blobs(10, 8, 10.0, 1.0, make_identity(10))
        Tc_hat = estimate_tc_anchor(g, pool, percentile=100)
        off_diagonal = Tc_hat.entries[~np.eye(10, dtype=bool)]
        assert off_diagonal.max() < 0.05

    def test_percentile_rows_valid(self, pool):
        """Test the robust percentile estimate is row-stochastic and close"""
        Tc = make_symmetric(10, 0.4)
        Tc_hat = estimate_tc_anchor(BlobPosterior.for_blobs(10, 8, 10.0, 1.0, Tc), pool, percentile=97)
        np.testing.assert_allclose(Tc_hat.entries.sum(axis=1), 1.0)
        assert estimation_error(Tc_hat, Tc) < 0.05

    def test_default_percentile_recovers_asymmetric(self, pool):
        """Test the default percentile reads off pair-flip rows"""
        Tc = make_asymmetric(10, 0.3)
        Tc_hat = estimate_tc_anchor(BlobPosterior.for_blobs(10, 8, 10.0, 1.0, Tc), pool)
        assert estimation_error(Tc_hat, Tc) < 0.05

    def test_estimated_ts(self, pool):
        """Test T_s from the estimate is close to T_s from the truth"""
        Tc = make_symmetric(10, 0.4)
        Tc_hat = estimate_tc_anchor(BlobPosterior.for_blobs(10, 8, 10.0, 1.0, Tc), pool, percentile=100)
        np.testing.assert_allclose(estimate_ts(Tc_hat).entries, class2simi(Tc).entries, atol=0.02)

    def test_empty_class_column(self):
        """Test a class no pool point can reach raises naming the class"""
        g = _FixedPosterior([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(EstimationError) as exc_info:
            estimate_tc_anchor(g, np.zeros((2, 3)), percentile=100)
        assert exc_info.value.class_index == 1

    def test_empty_pool(self):
        """Test empty pool"""
        with pytest.raises(EstimationError):
            estimate_tc_anchor(_FixedPosterior(np.zeros((0, 2))), np.zeros((0, 3)))


class TestAnchorIndices:
    """Test anchor selection"""

    def test_hard_argmax(self):
        """Test percentile 100 takes the column maximum"""
        probs = np.array([[0.9, 0.1], [0.6, 0.4], [0.2, 0.8]])
        np.testing.assert_array_equal(anchor_indices(probs, 100), [0, 2])

    def test_percentile_value_instance(self):
        """Test the anchor scores exactly the percentile value"""
        column = np.linspace(0.01, 1.0, 100)
        probs = np.column_stack([column, 1.0 - column])
        anchors = anchor_indices(probs, 97)
        assert probs[anchors[0], 0] == np.percentile(column, 97, method="higher")
        assert anchors[0] < np.argmax(column)

    def test_tied_top_scores_stay_in_class(self):
        """Test saturated scores of one class still give an anchor of that class"""
        column = np.full(100, 0.05)
        column[:10] = 0.6
        probs = np.column_stack([column, 1.0 - column])
        anchors = anchor_indices(probs, 97)
        assert anchors[0] in range(10)
        assert probs[anchors[1], 1] == pytest.approx(0.95)

    def test_constant_column(self):
        """Test a constant column falls back to the first index"""
        probs = np.full((4, 2), 0.5)
        np.testing.assert_array_equal(anchor_indices(probs, 97), [0, 0])

    def test_rejects_bad_percentile(self):
        """Test percentile must lie in (0, 100]"""
        with pytest.raises(ValueError):
            anchor_indices(np.ones((2, 2)) / 2, 0)
        with pytest.raises(ValueError):
            anchor_indices(np.ones((2, 2)) / 2, 101)
