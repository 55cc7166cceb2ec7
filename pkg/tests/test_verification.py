"""
Tests for the transform property suite
Run with: python -m pytest tests/test_verification.py -v
"""
import numpy as np
import pytest

from class2simi.transition import make_symmetric
from class2simi.verification import (
    check_degenerate_rows,
    check_small_c_counter_cell,
    monte_carlo_transition,
    sample_similarity_transition,
    noise_rate_grid,
    verify_theorems,
)


class TestVerifyTheorems:
    """Test verify_theorems"""

    @pytest.fixture(scope="class")
    def report(self):
        """Small analytic-only run"""
        return verify_theorems(c_range=range(2, 16), rho_range=[0.1, 0.4, 0.6], trials=0, n_matrices=30)

    def test_all_properties_pass(self, report):
        """Test every asserted property holds"""
        assert report.all_passed, report.summary()

    def test_no_monte_carlo_without_trials(self, report):
        """Test trials=0 skips the sampling checks"""
        assert report.monte_carlo == []
        assert not any(p.name.startswith("monte_carlo") for p in report.properties)

    def test_small_c_cell_not_asserted(self, report):
        """Test the c=2 cell is reported but not asserted"""
        cell = next(c for c in report.noise_rate_grid if c.c == 2 and c.rho == 0.4)
        assert not cell.asserted
        assert not cell.lower
        assert cell.simi_noise_rate == pytest.approx(0.48)

    def test_large_c_cells_lower(self, report):
        """Test c >= 8 cells have lower similarity noise"""
        asserted = [c for c in report.noise_rate_grid if c.asserted]
        assert asserted
        assert all(cell.lower for cell in asserted)

    def test_no_learnability_counterexamples(self, report):
        """Test diagonally dominant matrices are all learnable"""
        assert report.learnability_counterexamples == []

    def test_deterministic(self):
        """Test same seed gives the same report"""
        a = verify_theorems(c_range=range(2, 6), rho_range=[0.2], trials=0, n_matrices=5, seed=3)
        b = verify_theorems(c_range=range(2, 6), rho_range=[0.2], trials=0, n_matrices=5, seed=3)
        assert a.model_dump() == b.model_dump()

    def test_negative_trials(self):
        """Test trials must be non-negative"""
        with pytest.raises(ValueError):
            verify_theorems(c_range=[2], trials=-1)


class TestGridAndChecks:
    """Test individual checks"""

    def test_invalid_cells_skipped(self):
        """Test (c, rho) with rho >= (c-1)/c are left out"""
        cells = noise_rate_grid([2, 3], [0.4, 0.6])
        assert {(c.c, c.rho) for c in cells} == {(2, 0.4), (3, 0.4), (3, 0.6)}

    def test_degenerate_rows(self):
        """Test identical rows give a diagonal sum of exactly one"""
        assert check_degenerate_rows().passed

    def test_counter_cell(self):
        """Test c=2, rho=0.4 similarity noise exceeds class noise"""
        result = check_small_c_counter_cell()
        assert result.passed
        assert result.details["simi_noise_rate"] == pytest.approx(0.48)


class TestMonteCarlo:
    """Test sampling checks"""

    def test_sampled_transition_close(self):
        """Test sampled T_s is near the analytic one"""
        sampled = sample_similarity_transition(make_symmetric(10, 0.4), 400_000, np.random.default_rng(0))
        assert sampled["t11"] == pytest.approx(0.377778, abs=0.01)
        assert sampled["t01"] == pytest.approx(0.069136, abs=0.003)
        assert sampled["n_similar"] + sampled["n_dissimilar"] == 400_000

    def test_transition_trials(self):
        """Test trial entries are recorded"""
        result, entries = monte_carlo_transition(2, 200_000, np.random.default_rng(1))
        assert result.cases == 2
        assert len(entries) == 2
        assert {"analytic_t11", "empirical_t11", "passed"} <= set(entries[0])

    @pytest.mark.slow
    def test_full_suite_with_sampling(self):
        """Test the default suite including Monte-Carlo agreement"""
        report = verify_theorems(trials=2, n_matrices=100)
        assert report.all_passed, report.summary()
        assert len(report.monte_carlo) == 3
