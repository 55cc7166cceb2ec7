"""
Tests for Pydantic configuration and report schemas
Run with: python -m pytest tests/test_schemas.py -v
"""
import pytest
from pydantic import ValidationError

from class2simi.schemas import (
    BlobSpec,
    CsvSpec,
    DatasetSpec,
    ExperimentConfig,
    GridCell,
    LossKind,
    Method,
    ModelSpec,
    NoiseSpec,
    PropertyResult,
    TcSource,
    TrainConfig,
    VerificationReport,
)


def _config(**overrides):
    data = {
        "dataset": {"blobs": {"c": 3, "per_class": 10, "d": 2}},
        "noise": {"kind": "symmetric", "rate": 0.2},
    }
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


class TestTrainConfig:
    """Test TrainConfig defaults and bounds"""

    def test_defaults(self):
        """Test default optimizer settings"""
        config = TrainConfig()
        assert config.learning_rate == 0.05
        assert config.momentum == 0.9
        assert config.batch_size == 128
        assert config.loss_kind == LossKind.CE

    def test_batch_needs_a_pair(self):
        """Test batch size below 2 is rejected"""
        with pytest.raises(ValidationError):
            TrainConfig(batch_size=1)

    def test_momentum_below_one(self):
        """Test momentum must be < 1"""
        with pytest.raises(ValidationError):
            TrainConfig(momentum=1.0)

    def test_clamp_range(self):
        """Test probability clamp must be small and positive"""
        with pytest.raises(ValidationError):
            TrainConfig(probability_clamp=0.0)


class TestDataAndNoiseSpecs:
    """Test dataset and noise source validation"""

    def test_dataset_needs_one_source(self):
        """Test blobs and csv are mutually exclusive"""
        with pytest.raises(ValidationError):
            DatasetSpec()
        with pytest.raises(ValidationError):
            DatasetSpec(blobs=BlobSpec(), csv=CsvSpec(path="x.csv"))

    def test_noise_needs_rate(self):
        """Test symmetric noise requires a rate"""
        with pytest.raises(ValidationError):
            NoiseSpec(kind="symmetric")

    def test_identity_without_rate(self):
        """Test identity noise needs no rate"""
        assert NoiseSpec(kind="identity").rate is None

    def test_matrix_excludes_kind(self):
        """Test matrix path and kind are mutually exclusive"""
        with pytest.raises(ValidationError):
            NoiseSpec(kind="symmetric", rate=0.2, matrix_path="tc.txt")
        assert NoiseSpec(matrix_path="tc.txt").kind is None

    def test_hidden_widths_positive(self):
        """Test hidden layer widths must be positive"""
        with pytest.raises(ValidationError):
            ModelSpec(hidden=[16, 0])
        assert ModelSpec(hidden=[16, 8]).dims(2, 3) == [2, 16, 8, 3]


class TestExperimentConfig:
    """Test the experiment schema"""

    def test_defaults(self):
        """Test default method and Tc source"""
        config = _config()
        assert config.method == Method.F_CLASS2SIMI
        assert config.tc_source == TcSource.ESTIMATED
        assert config.anchor_percentile == 97.0

    def test_perturb_level_grid(self):
        """Test perturbation levels are multiples of 0.1"""
        assert _config(tc_source="perturbed", perturb_level=0.3).perturb_level == 0.3
        with pytest.raises(ValidationError):
            _config(tc_source="perturbed", perturb_level=0.25)

    def test_perturb_level_needs_perturbed_source(self):
        """Test a positive level requires tc_source perturbed"""
        with pytest.raises(ValidationError):
            _config(tc_source="true", perturb_level=0.2)

    def test_unknown_method(self):
        """Test unknown methods are rejected"""
        with pytest.raises(ValidationError):
            _config(method="coteaching")

    def test_stage2_warm_start(self):
        """Test Stage 2 uses the pairwise loss and a scaled learning rate"""
        config = _config(method="r_class2simi", train={"learning_rate": 0.1, "epochs": 7})
        stage2 = config.stage2_train()
        assert stage2.loss_kind == LossKind.R_CLASS2SIMI
        assert stage2.learning_rate == pytest.approx(0.01)
        assert stage2.epochs == 7

    def test_stage2_cold_start(self):
        """Test cold start keeps the full learning rate"""
        config = _config(warm_start=False, stage2_epochs=3, train={"learning_rate": 0.1})
        stage2 = config.stage2_train()
        assert stage2.learning_rate == pytest.approx(0.1)
        assert stage2.epochs == 3

    def test_method_loss_mapping(self):
        """Test methods map to their loss kinds"""
        assert Method.FORWARD.loss_kind == LossKind.FORWARD_POINTWISE
        assert Method.REWEIGHT.loss_kind == LossKind.REWEIGHT_POINTWISE
        assert Method.F_CLASS2SIMI.is_pairwise
        assert not Method.CE.is_pairwise

    def test_echo_is_json_ready(self):
        """Test config echo holds plain values"""
        echo = _config().echo()
        assert echo["method"] == "f_class2simi"
        assert echo["dataset"]["blobs"]["c"] == 3


class TestVerificationReport:
    """Test verification report aggregation"""

    def test_all_passed_ignores_unasserted(self):
        """Test unasserted properties do not fail the report"""
        report = VerificationReport(properties=[
            PropertyResult(name="a", passed=True),
            PropertyResult(name="b", passed=False, asserted=False),
        ])
        assert report.all_passed
        assert "PASS" in report.summary()

    def test_failure_named_in_summary(self):
        """Test failing property names appear in the summary"""
        report = VerificationReport(properties=[PropertyResult(name="oracle", passed=False)])
        assert not report.all_passed
        assert "oracle" in report.summary()

    def test_grid_cell(self):
        """Test grid cell fields"""
        cell = GridCell(c=2, rho=0.4, class_noise_rate=0.4, simi_noise_rate=0.48, lower=False, asserted=False)
        assert cell.model_dump()["simi_noise_rate"] == 0.48
