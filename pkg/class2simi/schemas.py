"""Pydantic schemas for Class2Simi

This module defines the experiment configuration, the run report and the
verification report shared by the pipeline and the CLI.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ============================================================================
# Enumerations
# ============================================================================

class Method(str, Enum):
    """Training method of an experiment"""
    CE = "ce"
    FORWARD = "forward"
    REWEIGHT = "reweight"
    F_CLASS2SIMI = "f_class2simi"
    R_CLASS2SIMI = "r_class2simi"

    @property
    def loss_kind(self) -> "LossKind":
        return METHOD_LOSS[self]

    @property
    def is_pairwise(self) -> bool:
        return self in (Method.F_CLASS2SIMI, Method.R_CLASS2SIMI)


class LossKind(str, Enum):
    """Loss minimized by the trainer"""
    CE = "ce"
    FORWARD_POINTWISE = "forward_pointwise"
    REWEIGHT_POINTWISE = "reweight_pointwise"
    F_CLASS2SIMI = "f_class2simi"
    R_CLASS2SIMI = "r_class2simi"


METHOD_LOSS = {
    Method.CE: LossKind.CE,
    Method.FORWARD: LossKind.FORWARD_POINTWISE,
    Method.REWEIGHT: LossKind.REWEIGHT_POINTWISE,
    Method.F_CLASS2SIMI: LossKind.F_CLASS2SIMI,
    Method.R_CLASS2SIMI: LossKind.R_CLASS2SIMI,
}


class NoiseKind(str, Enum):
    """Synthetic class-noise family"""
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"
    IDENTITY = "identity"


class TcSource(str, Enum):
    """Where the class transition matrix used for correction comes from"""
    TRUE = "true"
    ESTIMATED = "estimated"
    PERTURBED = "perturbed"


class Activation(str, Enum):
    RELU = "relu"
    SOFTSIGN = "softsign"


class PerturbMode(str, Enum):
    DEVIATION = "deviation"
    MULTIPLIER = "multiplier"


# ============================================================================
# Configuration models
# ============================================================================

class TrainConfig(BaseModel):
    """Optimizer and loss settings for one training stage"""
    learning_rate: float = Field(default=0.05, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=1e-4, ge=0)
    batch_size: int = Field(default=128, ge=2)
    epochs: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0)
    loss_kind: LossKind = LossKind.CE
    probability_clamp: float = Field(default=1e-7, gt=0, lt=0.1)
    w_max: float = Field(default=10.0, gt=0)


class ModelSpec(BaseModel):
    """Network shape; input and output sizes come from the data"""
    hidden: List[int] = Field(default_factory=lambda: [64])
    activation: Activation = Activation.RELU

    @field_validator("hidden")
    @classmethod
    def positive_widths(cls, v: List[int]) -> List[int]:
        if any(width < 1 for width in v):
            raise ValueError("hidden layer widths must be positive")
        return v

    def dims(self, d: int, c: int) -> List[int]:
        return [d, *self.hidden, c]


class BlobSpec(BaseModel):
    """Gaussian blob generator parameters"""
    c: int = Field(default=10, ge=2)
    per_class: int = Field(default=200, ge=1)
    d: int = Field(default=8, ge=2)
    separation: float = Field(default=5.0, gt=0)
    spread: float = Field(default=1.5, gt=0)
    seed: int = Field(default=0, ge=0)
    test_per_class: int = Field(default=100, ge=1)


class CsvSpec(BaseModel):
    """CSV dataset source"""
    path: str = Field(..., min_length=1)
    test_path: Optional[str] = None
    label_column: int = -1
    has_header: bool = True
    noisy_label_column: Optional[int] = None


class DatasetSpec(BaseModel):
    """Exactly one of ``blobs`` or ``csv``"""
    blobs: Optional[BlobSpec] = None
    csv: Optional[CsvSpec] = None

    @model_validator(mode="after")
    def exactly_one_source(self) -> "DatasetSpec":
        if (self.blobs is None) == (self.csv is None):
            raise ValueError("dataset needs exactly one source: blobs or csv")
        return self


class NoiseSpec(BaseModel):
    """Exactly one of a synthetic family (``kind`` + ``rate``) or ``matrix_path``"""
    kind: Optional[NoiseKind] = None
    rate: Optional[float] = Field(default=None, ge=0, lt=1)
    matrix_path: Optional[str] = None

    @model_validator(mode="after")
    def exactly_one_source(self) -> "NoiseSpec":
        if (self.kind is None) == (self.matrix_path is None):
            raise ValueError("noise needs exactly one source: kind or matrix_path")
        if self.matrix_path is not None and self.rate is not None:
            raise ValueError("rate cannot be combined with matrix_path")
        if self.kind in (NoiseKind.SYMMETRIC, NoiseKind.ASYMMETRIC) and self.rate is None:
            raise ValueError(f"{self.kind.value} noise needs a rate")
        return self


class ExperimentConfig(BaseModel):
    """Full description of one experiment run"""
    model_config = ConfigDict(use_enum_values=False)

    dataset: DatasetSpec
    noise: NoiseSpec
    method: Method = Method.F_CLASS2SIMI
    train: TrainConfig = Field(default_factory=TrainConfig)
    model: ModelSpec = Field(default_factory=ModelSpec)
    tc_source: TcSource = TcSource.ESTIMATED
    perturb_level: float = Field(default=0.0, ge=0, le=0.9)
    perturb_mode: PerturbMode = PerturbMode.DEVIATION
    perturb_seed: Optional[int] = Field(default=None, ge=0)
    anchor_percentile: float = Field(default=97.0, gt=0, le=100)
    validation_fraction: float = Field(default=0.1, gt=0, lt=1)
    stage2_lr_scale: float = Field(default=0.1, gt=0)
    stage2_epochs: Optional[int] = Field(default=None, ge=1)
    warm_start: bool = True
    final_window: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0)

    @field_validator("perturb_level")
    @classmethod
    def level_on_grid(cls, v: float) -> float:
        if abs(round(v * 10) - v * 10) > 1e-9:
            raise ValueError("perturb_level must be a multiple of 0.1")
        return round(v, 1)

    @model_validator(mode="after")
    def perturbation_consistency(self) -> "ExperimentConfig":
        if self.perturb_level > 0 and self.tc_source != TcSource.PERTURBED:
            raise ValueError("perturb_level requires tc_source 'perturbed'")
        return self

    def stage2_train(self) -> TrainConfig:
        """Stage-2 settings: Stage-1 hyperparameters with the pairwise loss and scaled lr."""
        return self.train.model_copy(update={
            "loss_kind": self.method.loss_kind,
            "learning_rate": self.train.learning_rate * (self.stage2_lr_scale if self.warm_start else 1.0),
            "epochs": self.stage2_epochs or self.train.epochs,
        })

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


# ============================================================================
# Reports
# ============================================================================

class EpochRecord(BaseModel):
    stage: str
    epoch: int = Field(..., ge=1)
    train_loss: float
    noisy_val_accuracy: float = Field(..., ge=0, le=1)
    clean_test_accuracy: Optional[float] = Field(default=None, ge=0, le=1)


class RunReport(BaseModel):
    """Outcome of one experiment, reproducible from (config, seed)"""
    method: Method
    seed: int
    epochs: List[EpochRecord] = Field(default_factory=list)
    selected_epoch: Optional[int] = None
    noisy_val_accuracy: float = Field(..., ge=0, le=1)
    clean_test_accuracy: Optional[float] = Field(default=None, ge=0, le=1)
    final_accuracy_mean: Optional[float] = Field(default=None, ge=0, le=1)
    pair_accuracy: Optional[float] = Field(default=None, ge=0, le=1)
    tc_source: TcSource
    tc_hat: Optional[List[List[float]]] = None
    ts_hat: Optional[List[List[float]]] = None
    tc_estimation_error: Optional[float] = None
    noise_rates: Dict[str, float] = Field(default_factory=dict)
    wall_clock: Dict[str, float] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)

    def summary(self) -> str:
        acc = "n/a" if self.clean_test_accuracy is None else f"{self.clean_test_accuracy:.4f}"
        return (
            f"method={self.method.value} seed={self.seed} clean_test_accuracy={acc} "
            f"noisy_val_accuracy={self.noisy_val_accuracy:.4f}"
        )

    def deterministic_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude={"wall_clock"})


class PropertyResult(BaseModel):
    name: str
    passed: bool
    asserted: bool = True
    max_deviation: Optional[float] = None
    cases: int = 0
    details: Dict[str, Any] = Field(default_factory=dict)


class GridCell(BaseModel):
    c: int
    rho: float
    class_noise_rate: float
    simi_noise_rate: float
    lower: bool
    asserted: bool


class VerificationReport(BaseModel):
    """Pass/fail per property with the largest observed deviations"""
    properties: List[PropertyResult] = Field(default_factory=list)
    noise_rate_grid: List[GridCell] = Field(default_factory=list)
    learnability_counterexamples: List[List[List[float]]] = Field(default_factory=list)
    monte_carlo: List[Dict[str, Any]] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(p.passed for p in self.properties if p.asserted)

    def summary(self) -> str:
        asserted = [p for p in self.properties if p.asserted]
        failed = [p.name for p in asserted if not p.passed]
        status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
        return f"verify: {len(asserted) - len(failed)}/{len(asserted)} properties passed {status}"


class RobustnessRow(BaseModel):
    level: float
    method: Method
    seed: int
    accuracy: Optional[float] = None


def resolve_path(base: Optional[Path], value: Optional[str]) -> Optional[Path]:
    """Resolve a config-relative path."""
    if value is None:
        return None
    path = Path(value)
    if base is not None and not path.is_absolute():
        path = base / path
    return path
