"""
Tests for transition-matrix algebra: constructors, the class-to-similarity
transform, noise rates, learnability and perturbation
Run with: python -m pytest tests/test_transition.py -v
"""
import numpy as np
import pytest

from class2simi.errors import (
    DimensionMismatchError,
    MatrixValidationError,
    PerturbationError,
    PriorError,
    ValidationException,
)
from class2simi.transition import (
    ClassPrior,
    ClassTransitionMatrix,
    SimilarityTransitionMatrix,
    class2simi,
    class_noise_rate,
    is_learnable,
    learnability_check,
    make_asymmetric,
    make_identity,
    make_noise_matrix,
    make_symmetric,
    pair_similar_prior,
    parse_matrix,
    perturb_tc,
    random_transition_matrix,
    read_matrix,
    simi_noise_rate,
    simi_noise_rates_by_pair_type,
    simi_transition_oracle,
    uniform_class2simi,
    transform_report,
    weighted_class2simi,
    write_matrix,
)


class TestConstructors:
    """Test class transition matrix constructors"""

    def test_symmetric_entries(self):
        """Test symmetric noise puts 1-rho on the diagonal and spreads the rest"""
        Tc = make_symmetric(3, 0.3)
        expected = np.array([[0.7, 0.15, 0.15], [0.15, 0.7, 0.15], [0.15, 0.15, 0.7]])
        np.testing.assert_allclose(Tc.entries, expected)

    def test_asymmetric_is_cyclic_flip(self):
        """Test pair flip moves rho mass to the next class"""
        Tc = make_asymmetric(4, 0.2)
        expected = np.array([
            [0.8, 0.2, 0.0, 0.0],
            [0.0, 0.8, 0.2, 0.0],
            [0.0, 0.0, 0.8, 0.2],
            [0.2, 0.0, 0.0, 0.8],
        ])
        np.testing.assert_allclose(Tc.entries, expected)

    def test_identity(self):
        """Test identity constructor"""
        np.testing.assert_array_equal(make_identity(5).entries, np.eye(5))

    def test_symmetric_rate_bound(self):
        """Test symmetric rate must stay below (c-1)/c"""
        with pytest.raises(ValidationException):
            make_symmetric(2, 0.5)
        with pytest.raises(ValidationException):
            make_symmetric(10, 0.95)

    def test_make_noise_matrix_dispatch(self):
        """Test noise kind names resolve to constructors"""
        assert make_noise_matrix("symmetric", 4, 0.2) == make_symmetric(4, 0.2)
        assert make_noise_matrix("pairflip", 4, 0.2) == make_asymmetric(4, 0.2)
        assert make_noise_matrix("identity", 4) == make_identity(4)
        with pytest.raises(ValidationException):
            make_noise_matrix("gaussian", 4, 0.2)

    def test_rejects_non_stochastic_rows(self):
        """Test rows must sum to 1"""
        with pytest.raises(MatrixValidationError):
            ClassTransitionMatrix(np.array([[0.9, 0.2], [0.5, 0.5]]))

    def test_rejects_negative_entries(self):
        """Test entries must lie in [0, 1]"""
        with pytest.raises(MatrixValidationError):
            ClassTransitionMatrix(np.array([[1.2, -0.2], [0.5, 0.5]]))

    def test_rejects_non_square(self):
        """Test shape validation"""
        with pytest.raises(MatrixValidationError):
            ClassTransitionMatrix(np.ones((2, 3)) / 3)

    def test_entries_are_read_only(self):
        """Test matrices are immutable values"""
        Tc = make_identity(3)
        with pytest.raises(ValueError):
            Tc.entries[0, 0] = 0.5


class TestClassPrior:
    """Test ClassPrior normalization"""

    def test_counts_are_normalized(self):
        """Test raw counts become probabilities"""
        prior = ClassPrior.from_counts([2, 1, 1])
        np.testing.assert_allclose(prior.p, [0.5, 0.25, 0.25])
        assert not prior.is_uniform

    def test_from_labels(self):
        """Test prior estimated from label counts"""
        prior = ClassPrior.from_labels([0, 0, 1, 2], 3)
        np.testing.assert_allclose(prior.p, [0.5, 0.25, 0.25])

    def test_from_labels_rejects_out_of_range(self):
        """Test a label beyond the class count is not dropped"""
        with pytest.raises(DimensionMismatchError):
            ClassPrior.from_labels([0, 1, 3], 3)
        with pytest.raises(PriorError):
            ClassPrior.from_labels([0, -1, 2], 3)

    def test_uniform(self):
        """Test uniform prior"""
        assert ClassPrior.uniform(4).is_uniform

    def test_rejects_negative(self):
        """Test negative mass is rejected"""
        with pytest.raises(PriorError):
            ClassPrior(np.array([0.5, -0.1, 0.6]))

    def test_rejects_zero_mass(self):
        """Test all-zero prior is rejected"""
        with pytest.raises(PriorError):
            ClassPrior(np.zeros(3))


class TestClass2Simi:
    """Test the class-to-similarity transform"""

    def test_identity_maps_to_identity(self):
        """Test clean labels give clean similarity labels"""
        for c in (2, 3, 10, 50):
            np.testing.assert_array_equal(class2simi(make_identity(c)).entries, np.eye(2))

    def test_symmetric_ten_classes(self):
        """Test symmetric c=10, rho=0.4 reference values"""
        Ts = class2simi(make_symmetric(10, 0.4))
        assert Ts.t11 == pytest.approx(0.377778, abs=1e-6)
        assert Ts.t01 == pytest.approx(0.069136, abs=1e-6)
        assert Ts.t10 == pytest.approx(0.622222, abs=1e-6)

    def test_symmetric_two_classes(self):
        """Test c=2 similarity matrix"""
        Ts = class2simi(make_symmetric(2, 0.4))
        np.testing.assert_allclose(Ts.entries, [[0.52, 0.48], [0.48, 0.52]], atol=1e-12)

    def test_rows_are_stochastic(self):
        """Test every transform output is a valid 2x2 transition matrix"""
        rng = np.random.default_rng(3)
        for _ in range(20):
            Tc = random_transition_matrix(int(rng.integers(2, 12)), rng)
            Ts = class2simi(Tc)
            np.testing.assert_allclose(Ts.entries.sum(axis=1), 1.0)
            assert np.all(Ts.entries >= 0.0)

    def test_matches_oracle_uniform_prior(self):
        """Test closed form agrees with brute-force enumeration"""
        rng = np.random.default_rng(0)
        for _ in range(25):
            Tc = random_transition_matrix(int(rng.integers(2, 9)), rng)
            np.testing.assert_allclose(class2simi(Tc).entries, simi_transition_oracle(Tc).entries, atol=1e-10)

    def test_matches_oracle_random_prior(self):
        """Test prior-weighted transform agrees with brute-force enumeration"""
        rng = np.random.default_rng(1)
        for _ in range(25):
            Tc = random_transition_matrix(int(rng.integers(2, 9)), rng)
            prior = ClassPrior(rng.dirichlet(np.ones(Tc.c)))
            np.testing.assert_allclose(
                class2simi(Tc, prior).entries,
                simi_transition_oracle(Tc, prior).entries,
                atol=1e-10,
            )

    def test_weighted_reduces_to_closed_form(self):
        """Test uniform weights give the balanced closed form"""
        rng = np.random.default_rng(2)
        Tc = random_transition_matrix(6, rng)
        np.testing.assert_allclose(
            weighted_class2simi(Tc, ClassPrior.uniform(6)).entries,
            uniform_class2simi(Tc).entries,
            atol=1e-12,
        )

    def test_prior_dimension_mismatch(self):
        """Test prior and matrix must agree on c"""
        with pytest.raises(DimensionMismatchError):
            class2simi(make_identity(3), ClassPrior.uniform(4))

    def test_similarity_matrix_validation(self):
        """Test similarity matrix must be 2x2 and row-stochastic"""
        with pytest.raises(MatrixValidationError):
            SimilarityTransitionMatrix(np.eye(3))
        assert SimilarityTransitionMatrix.identity() == SimilarityTransitionMatrix(np.eye(2))


class TestNoiseRates:
    """Test analytic noise rates"""

    def test_class_noise_rate_symmetric(self):
        """Test symmetric class noise rate equals rho"""
        assert class_noise_rate(make_symmetric(10, 0.4)) == pytest.approx(0.4)

    def test_class_noise_rate_with_prior(self):
        """Test class noise rate under a non-uniform prior"""
        prior = ClassPrior(np.array([0.5, 0.25, 0.25]))
        assert class_noise_rate(make_asymmetric(3, 0.4), prior) == pytest.approx(0.4)

    def test_simi_noise_rate_ten_classes(self):
        """Test similarity noise is lower than class noise for c=10"""
        prior = ClassPrior.uniform(10)
        rate = simi_noise_rate(class2simi(make_symmetric(10, 0.4)), pair_similar_prior(prior))
        assert rate == pytest.approx(0.124444, abs=1e-6)
        assert rate < 0.4

    def test_simi_noise_rate_two_classes(self):
        """Test similarity noise exceeds class noise for c=2"""
        prior = ClassPrior.uniform(2)
        rate = simi_noise_rate(class2simi(make_symmetric(2, 0.4)), pair_similar_prior(prior))
        assert rate == pytest.approx(0.48)

    def test_pair_similar_prior(self):
        """Test probability that two draws share a class"""
        assert pair_similar_prior(ClassPrior.uniform(10)) == pytest.approx(0.1)
        assert pair_similar_prior(ClassPrior(np.array([0.5, 0.25, 0.25]))) == pytest.approx(0.375)

    def test_simi_noise_rate_rejects_bad_prior(self):
        """Test similar-pair prior must be a probability"""
        with pytest.raises(ValidationException):
            simi_noise_rate(SimilarityTransitionMatrix.identity(), 1.5)

    def test_rates_by_pair_type(self):
        """Test s-pair and d-pair noise rates"""
        rates = simi_noise_rates_by_pair_type(class2simi(make_symmetric(10, 0.4)))
        assert rates["s_pair_noise_rate"] == pytest.approx(0.622222, abs=1e-6)
        assert rates["d_pair_noise_rate"] == pytest.approx(0.069136, abs=1e-6)


class TestLearnability:
    """Test invertibility and learnability checks"""

    def test_symmetric_is_learnable(self):
        """Test symmetric c=10 rho=0.4 is invertible and learnable"""
        Tc = make_symmetric(10, 0.4)
        report = learnability_check(Tc, class2simi(Tc))
        assert report.tc_invertible
        assert report.ts_learnable

    def test_identical_rows(self):
        """Test a matrix with identical rows is singular and not learnable"""
        Tc = ClassTransitionMatrix(np.full((2, 2), 0.5))
        Ts = class2simi(Tc)
        report = learnability_check(Tc, Ts)
        assert not report.tc_invertible
        assert not report.ts_learnable
        assert report.ts_diagonal_sum == pytest.approx(1.0)
        assert report.to_dict()["tc_condition_estimate"] is None

    def test_singular_but_learnable(self):
        """Test a rank-deficient Tc can still give a learnable Ts"""
        Tc = ClassTransitionMatrix(np.array([
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ]))
        report = learnability_check(Tc, class2simi(Tc))
        assert not report.tc_invertible
        assert report.ts_learnable

    def test_diagonally_dominant_learnable(self):
        """Test random diagonally dominant matrices are learnable"""
        rng = np.random.default_rng(4)
        for _ in range(50):
            Tc = random_transition_matrix(int(rng.integers(2, 15)), rng, diagonally_dominant=True)
            assert np.all(np.diag(Tc.entries) > 0.5)
            assert is_learnable(class2simi(Tc))


class TestPerturbation:
    """Test random perturbation of a transition matrix"""

    def test_identity_stays_stochastic(self):
        """Test perturbed identity is still row-stochastic"""
        perturbed = perturb_tc(make_identity(10), 0.1, seed=7)
        np.testing.assert_allclose(perturbed.entries.sum(axis=1), 1.0)
        np.testing.assert_allclose(perturbed.entries, np.eye(10))

    def test_deterministic_for_seed(self):
        """Test same seed gives the same matrix"""
        Tc = make_symmetric(10, 0.4)
        assert perturb_tc(Tc, 0.2, seed=3) == perturb_tc(Tc, 0.2, seed=3)
        assert perturb_tc(Tc, 0.2, seed=3) != perturb_tc(Tc, 0.2, seed=4)

    def test_zero_level_still_perturbs(self):
        """Test level 0 draws factors from [0, 0.1]"""
        Tc = make_symmetric(10, 0.4)
        perturbed = perturb_tc(Tc, 0.0, seed=1)
        assert perturbed != Tc
        assert np.max(np.abs(perturbed.entries - Tc.entries)) < 0.15

    def test_noop_returns_input(self):
        """Test noop flag returns the matrix unchanged"""
        Tc = make_symmetric(5, 0.2)
        assert perturb_tc(Tc, 0.3, seed=0, noop=True) is Tc

    def test_deviation_grows_with_level(self):
        """Test larger levels move the matrix further"""
        Tc = make_symmetric(10, 0.4)
        small = np.abs(perturb_tc(Tc, 0.0, seed=5).entries - Tc.entries).mean()
        large = np.abs(perturb_tc(Tc, 0.4, seed=5).entries - Tc.entries).mean()
        assert large > small

    def test_multiplier_mode_can_zero_a_row(self):
        """Test sign flips on the identity eventually empty a row"""
        raised = 0
        for seed in range(50):
            try:
                perturbed = perturb_tc(make_identity(10), 0.1, seed=seed, mode="multiplier")
                np.testing.assert_allclose(perturbed.entries.sum(axis=1), 1.0)
            except PerturbationError:
                raised += 1
        assert raised > 0

    def test_rejects_bad_level(self):
        """Test level must be a non-negative multiple of 0.1"""
        with pytest.raises(ValidationException):
            perturb_tc(make_identity(3), 0.15, seed=0)
        with pytest.raises(ValidationException):
            perturb_tc(make_identity(3), -0.1, seed=0)

    def test_rejects_unknown_mode(self):
        """Test unknown perturbation mode"""
        with pytest.raises(ValidationException):
            perturb_tc(make_identity(3), 0.1, seed=0, mode="additive")


class TestMatrixFiles:
    """Test matrix text format"""

    def test_round_trip(self, tmp_path):
        """Test write then read returns the same matrix"""
        Tc = random_transition_matrix(7, np.random.default_rng(9))
        path = write_matrix(tmp_path / "tc.txt", Tc)
        assert read_matrix(path) == Tc

    def test_first_line_is_dimension(self, tmp_path):
        """Test file layout"""
        path = write_matrix(tmp_path / "id.txt", make_identity(3))
        lines = path.read_text().splitlines()
        assert lines[0] == "3"
        assert lines[1] == "1 0 0"

    def test_parse_row_count_mismatch(self):
        """Test too few rows"""
        with pytest.raises(MatrixValidationError):
            parse_matrix("3\n1 0 0\n0 1 0\n")

    def test_parse_non_numeric(self):
        """Test non-numeric cell"""
        with pytest.raises(MatrixValidationError):
            parse_matrix("2\n1 x\n0 1\n")

    def test_missing_file(self, tmp_path):
        """Test missing matrix file"""
        with pytest.raises(MatrixValidationError):
            read_matrix(tmp_path / "absent.txt")

    def test_transform_report(self):
        """Test report carries the transform and both rates"""
        report = transform_report(make_symmetric(10, 0.4))
        assert report["c"] == 10
        assert report["class_noise_rate"] == pytest.approx(0.4)
        assert report["simi_noise_rate"] == pytest.approx(0.124444, abs=1e-6)
        assert report["learnability"]["ts_learnable"] is True
        assert len(report["ts"]) == 2
