from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .components.estimation import estimate_tc_anchor, estimate_ts, estimation_error
from .components.evaluator import Class2SimiEvaluator
from .components.model import MlpModel, load_checkpoint, save_checkpoint
from .components.noise import (
    CsvSchema,
    LabeledDataset,
    corrupt_labels,
    generate_blobs,
    load_csv,
    noise_report,
    train_val_split,
)
from .components.trainer import Class2SimiTrainer, TrainResult
from .errors import ConfigError, DimensionMismatchError, NotLearnableError
from .logging_utils import RunLogger, StageTimer
from .monitor import TrainingMonitor
from .schemas import (
    EpochRecord,
    ExperimentConfig,
    LossKind,
    Method,
    RobustnessRow,
    RunReport,
    TcSource,
    TrainConfig,
    resolve_path,
)
from .transition import (
    ClassTransitionMatrix,
    SimilarityTransitionMatrix,
    class_noise_rate,
    class2simi,
    is_learnable,
    make_noise_matrix,
    perturb_tc,
    read_matrix,
    write_matrix,
)

TEST_SEED_OFFSET = 1_000_003
ROBUSTNESS_LEVELS = (0.0, 0.1, 0.2, 0.3, 0.4)
ROBUSTNESS_METHODS = (Method.FORWARD, Method.F_CLASS2SIMI)


@dataclass
class DataBundle:
    train: LabeledDataset
    val: LabeledDataset
    test: Optional[LabeledDataset]
    Tc: ClassTransitionMatrix
    noise_rates: Dict[str, float]

    @property
    def c(self) -> int:
        return self.train.c


@dataclass
class Stage1Result:
    model: MlpModel
    Tc_hat: ClassTransitionMatrix
    Ts_hat: SimilarityTransitionMatrix
    training: TrainResult
    estimation_error: Optional[float] = None
    checkpoint_path: Optional[Path] = None


class Class2SimiPipeline:
    """Two-stage training (pointwise warm-up, then pairwise correction) and its baselines.

    Stage 1 fits g on noisy labels with cross-entropy and reads off T_c;
    Stage 2 transforms T_c to T_s and fine-tunes g on the similarity loss.
    Data and the Stage-1 result are cached per pipeline instance.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        base_dir: Optional[Union[str, Path]] = None,
        save_dir: Optional[Union[str, Path]] = None,
        monitor: Optional[TrainingMonitor] = None,
    ):
        self.config = config
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.save_dir = Path(save_dir) if save_dir is not None else None
        self.monitor = monitor or TrainingMonitor()
        self.evaluator = Class2SimiEvaluator()
        self.logger = RunLogger("class2simi.pipeline")
        self.timer = StageTimer(self.logger)
        self._data: Optional[DataBundle] = None
        self._stage1: Optional[Stage1Result] = None
        self.final_model: Optional[MlpModel] = None

    # ------------------------------------------------------------------
    # Data
    # ------------------------------------------------------------------

    def true_tc(self, c: int) -> ClassTransitionMatrix:
        noise = self.config.noise
        if noise.matrix_path is not None:
            Tc = read_matrix(resolve_path(self.base_dir, noise.matrix_path))
            if Tc.c != c:
                raise DimensionMismatchError("noise matrix class count", c, Tc.c)
            return Tc
        return make_noise_matrix(noise.kind.value, c, noise.rate or 0.0)

    def load_data(self) -> DataBundle:
        if self._data is not None:
            return self._data
        spec = self.config.dataset
        if spec.blobs is not None:
            b = spec.blobs
            full = generate_blobs(b.c, b.per_class, b.d, b.separation, b.spread, b.seed)
            test = generate_blobs(b.c, b.test_per_class, b.d, b.separation, b.spread, b.seed + TEST_SEED_OFFSET)
        else:
            csv = spec.csv
            schema = CsvSchema(csv.label_column, csv.has_header, csv.noisy_label_column)
            path = resolve_path(self.base_dir, csv.path)
            if not path.exists():
                raise ConfigError("dataset.csv.path", f"file not found: {path}")
            full = load_csv(path, schema)
            test = None
            if csv.test_path is not None:
                test = load_csv(resolve_path(self.base_dir, csv.test_path), CsvSchema(csv.label_column, csv.has_header))
                c = max(full.c, test.c)
                full, test = replace(full, c=c), replace(test, c=c)

        Tc = self.true_tc(full.c)
        if full.noisy_labels is None:
            full = corrupt_labels(full, Tc, seed=self.config.seed)
        rates = {"analytic_class_noise_rate": class_noise_rate(Tc)}
        if full.clean_labels is not None:
            rates = noise_report(full, Tc, max_pairs=200_000, seed=self.config.seed)
        train, val = train_val_split(full, self.config.validation_fraction, seed=self.config.seed)
        self.logger.info("Data ready", n_train=train.n, n_val=val.n, n_test=test.n if test else 0, c=full.c)
        self._data = DataBundle(train=train, val=val, test=test, Tc=Tc, noise_rates=rates)
        return self._data

    def init_model(self, data: DataBundle) -> MlpModel:
        dims = self.config.model.dims(data.train.d, data.c)
        return MlpModel.init(dims, activation=self.config.model.activation.value, seed=self.config.train.seed)

    def _trainer(self, config: TrainConfig) -> Class2SimiTrainer:
        return Class2SimiTrainer(config, monitor=self.monitor, evaluator=self.evaluator)

    # ------------------------------------------------------------------
    # Transition matrices
    # ------------------------------------------------------------------

    def correction_tc(self, data: DataBundle, g: Optional[MlpModel] = None) -> ClassTransitionMatrix:
        """T_c used for loss correction, per ``tc_source``."""
        source = self.config.tc_source
        if source == TcSource.TRUE:
            return data.Tc
        if source == TcSource.PERTURBED:
            level = self.config.perturb_level
            seed = self.config.perturb_seed if self.config.perturb_seed is not None else self.config.seed
            return perturb_tc(data.Tc, level, seed=seed,
                              mode=self.config.perturb_mode.value, noop=level == 0.0)
        if g is None:
            raise ConfigError("tc_source", "estimation needs the Stage-1 model")
        return estimate_tc_anchor(g, data.train.features, self.config.anchor_percentile)

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def run_stage1(self) -> Stage1Result:
        """Train g with cross-entropy on noisy labels, then derive T_c and T_s."""
        if self._stage1 is not None:
            return self._stage1
        data = self.load_data()
        self.timer.start("stage1")
        stage1_train = self.config.train.model_copy(update={"loss_kind": LossKind.CE})
        result = self._trainer(stage1_train).train(
            self.init_model(data), data.train, data.val, test_ds=data.test, stage="stage1"
        )
        Tc_hat = self.correction_tc(data, result.model)
        Ts_hat = estimate_ts(Tc_hat)
        error = estimation_error(Tc_hat, data.Tc) if self.config.tc_source != TcSource.TRUE else 0.0
        self.timer.stop("stage1")

        checkpoint = None
        if self.save_dir is not None:
            self.save_dir.mkdir(parents=True, exist_ok=True)
            checkpoint = save_checkpoint(result.model, self.save_dir / "stage1_model.json")
            write_matrix(self.save_dir / "tc_hat.txt", Tc_hat)
            write_matrix(self.save_dir / "ts_hat.txt", Ts_hat)
        self.logger.info(
            "Stage 1 finished",
            selected_epoch=result.selected_epoch,
            noisy_val_accuracy=result.noisy_val_accuracy,
            tc_estimation_error=error,
        )
        self._stage1 = Stage1Result(result.model, Tc_hat, Ts_hat, result, error, checkpoint)
        return self._stage1

    def load_stage1(self, checkpoint: Union[str, Path]) -> Stage1Result:
        """Stage-1 result from a saved checkpoint instead of training."""
        data = self.load_data()
        model = load_checkpoint(checkpoint)
        Tc_hat = self.correction_tc(data, model)
        self._stage1 = Stage1Result(
            model=model,
            Tc_hat=Tc_hat,
            Ts_hat=estimate_ts(Tc_hat),
            training=TrainResult(model=model, selected_epoch=0,
                                 noisy_val_accuracy=self.evaluator.noisy_accuracy(model, data.val)),
            estimation_error=estimation_error(Tc_hat, data.Tc),
            checkpoint_path=Path(checkpoint),
        )
        return self._stage1

    def run_stage2(self, model: MlpModel, Ts: SimilarityTransitionMatrix) -> TrainResult:
        """Train the pairwise loss starting from ``model`` (or a fresh init when warm start is off)."""
        if not is_learnable(Ts):
            raise NotLearnableError(float(Ts.t00 + Ts.t11))
        data = self.load_data()
        if model.num_classes != data.c:
            raise DimensionMismatchError("model class count", data.c, model.num_classes)
        if model.input_dim != data.train.d:
            raise DimensionMismatchError("model input feature dimension", data.train.d, model.input_dim)
        start = model.copy() if self.config.warm_start else self.init_model(data)
        self.timer.start("stage2")
        result = self._trainer(self.config.stage2_train()).train(
            start, data.train, data.val, Ts=Ts, test_ds=data.test, stage="stage2"
        )
        self.timer.stop("stage2")
        return result

    def run_pointwise(self, method: Method, Tc_hat: Optional[ClassTransitionMatrix]) -> TrainResult:
        """Forward or Reweight baseline trained from scratch."""
        data = self.load_data()
        train_config = self.config.train.model_copy(update={"loss_kind": method.loss_kind})
        self.timer.start(method.value)
        result = self._trainer(train_config).train(
            self.init_model(data), data.train, data.val, Tc=Tc_hat, test_ds=data.test, stage=method.value
        )
        self.timer.stop(method.value)
        return result

    # ------------------------------------------------------------------
    # Experiments
    # ------------------------------------------------------------------

    def run_experiment(self) -> RunReport:
        config = self.config
        data = self.load_data()
        method = config.method
        epochs: List[EpochRecord] = []
        Tc_hat: Optional[ClassTransitionMatrix] = None
        Ts_hat: Optional[SimilarityTransitionMatrix] = None
        error: Optional[float] = None

        needs_stage1 = method == Method.CE or method.is_pairwise or config.tc_source == TcSource.ESTIMATED
        if needs_stage1:
            stage1 = self.run_stage1()
            epochs.extend(stage1.training.history)
            Tc_hat, Ts_hat, error = stage1.Tc_hat, stage1.Ts_hat, stage1.estimation_error
            final = stage1.training
        else:
            Tc_hat = self.correction_tc(data)
            Ts_hat = class2simi(Tc_hat)
            error = estimation_error(Tc_hat, data.Tc)

        if method.is_pairwise:
            final = self.run_stage2(stage1.model, Ts_hat)
            epochs.extend(final.history)
        elif method in (Method.FORWARD, Method.REWEIGHT):
            final = self.run_pointwise(method, Tc_hat)
            epochs.extend(final.history)

        tail = [r.clean_test_accuracy for r in final.history[-config.final_window:] if r.clean_test_accuracy is not None]
        report = RunReport(
            method=method,
            seed=config.seed,
            epochs=epochs,
            selected_epoch=final.selected_epoch,
            noisy_val_accuracy=final.noisy_val_accuracy,
            clean_test_accuracy=self.evaluator.clean_accuracy(final.model, data.test),
            final_accuracy_mean=float(np.mean(tail)) if tail else None,
            pair_accuracy=self.evaluator.pair_accuracy(final.model, data.test) if method.is_pairwise else None,
            tc_source=config.tc_source,
            tc_hat=Tc_hat.to_list() if Tc_hat is not None else None,
            ts_hat=Ts_hat.to_list() if Ts_hat is not None else None,
            tc_estimation_error=error,
            noise_rates=data.noise_rates,
            wall_clock=self.timer.get_timings(),
            config=config.echo(),
        )
        self.logger.info("Experiment finished", method=method.value, clean_test_accuracy=report.clean_test_accuracy)
        self.final_model = final.model
        return report


# ----------------------------------------------------------------------
# Multi-run helpers
# ----------------------------------------------------------------------

def with_seed(config: ExperimentConfig, seed: int, vary_data: bool = True) -> ExperimentConfig:
    """Copy of ``config`` with training seeds (and optionally data seeds) set to ``seed``."""
    update: Dict[str, Any] = {"train": config.train.model_copy(update={"seed": seed})}
    if vary_data:
        update["seed"] = seed
        if config.dataset.blobs is not None:
            blobs = config.dataset.blobs.model_copy(update={"seed": seed})
            update["dataset"] = config.dataset.model_copy(update={"blobs": blobs})
    return config.model_copy(update=update)


def run_experiment(config: ExperimentConfig, base_dir: Optional[Path] = None, save_dir: Optional[Path] = None) -> RunReport:
    return Class2SimiPipeline(config, base_dir=base_dir, save_dir=save_dir).run_experiment()


def run_matrix_robustness(
    config: ExperimentConfig,
    levels: Sequence[float] = ROBUSTNESS_LEVELS,
    seeds: Optional[Iterable[int]] = None,
    base_dir: Optional[Path] = None,
) -> List[RobustnessRow]:
    """Forward vs F-Class2Simi with the TRUE T_c perturbed at each level.

    Data stays fixed across seeds; initialization, batch order and the
    perturbation draw vary with the seed. Level 0 uses the unperturbed
    matrix. The perturbation follows ``config.perturb_mode``: the default
    ``deviation`` scales entries by 1 +- U[level, level + 0.1], while
    ``multiplier`` uses the literal factor +-U[1 + level, 1 + level + 0.1].
    """
    allowed = {round(level, 1) for level in ROBUSTNESS_LEVELS}
    for level in levels:
        if round(level, 1) not in allowed or abs(level - round(level, 1)) > 1e-9:
            raise ConfigError("levels", f"level {level} not in {sorted(allowed)}")
    seeds = list(seeds) if seeds is not None else [config.train.seed]

    rows: List[RobustnessRow] = []
    for seed in seeds:
        seeded = with_seed(config, seed, vary_data=False)
        base = Class2SimiPipeline(seeded.model_copy(update={"tc_source": TcSource.TRUE}), base_dir=base_dir)
        for level in levels:
            for method in ROBUSTNESS_METHODS:
                level_config = seeded.model_copy(update={
                    "method": method,
                    "tc_source": TcSource.PERTURBED,
                    "perturb_level": round(level, 1),
                    "perturb_seed": seed,
                })
                pipeline = Class2SimiPipeline(level_config, base_dir=base_dir, monitor=base.monitor)
                pipeline._data = base.load_data()
                if method.is_pairwise:
                    pipeline._stage1 = _shared_stage1(base, pipeline)
                report = pipeline.run_experiment()
                rows.append(RobustnessRow(level=round(level, 1), method=method, seed=seed,
                                          accuracy=report.clean_test_accuracy))
    return rows


def _shared_stage1(base: Class2SimiPipeline, pipeline: Class2SimiPipeline) -> Stage1Result:
    """Reuse the Stage-1 model across levels; only the correction matrix changes."""
    shared = base.run_stage1()
    Tc_hat = pipeline.correction_tc(pipeline.load_data(), shared.model)
    return replace(shared, Tc_hat=Tc_hat, Ts_hat=estimate_ts(Tc_hat),
                   estimation_error=estimation_error(Tc_hat, pipeline.load_data().Tc))


def robustness_table(rows: Sequence[RobustnessRow]) -> pd.DataFrame:
    return pd.DataFrame([
        {"level": row.level, "method": row.method.value, "seed": row.seed, "accuracy": row.accuracy}
        for row in rows
    ], columns=["level", "method", "seed", "accuracy"])


def robustness_csv(rows: Sequence[RobustnessRow]) -> str:
    return robustness_table(rows).to_csv(index=False, lineterminator="\n", float_format="%.6f")
