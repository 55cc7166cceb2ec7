from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional

import numpy as np

from ..monitor import TrainingMonitor
from ..schemas import EpochRecord, LossKind, TrainConfig
from ..transition import ClassTransitionMatrix, SimilarityTransitionMatrix
from .evaluator import Class2SimiEvaluator
from .losses import PAIRWISE_KINDS, loss_and_grad
from .model import MlpModel
from .noise import LabeledDataset
from .optim import SGDOptimizer


@dataclass
class TrainResult:
    model: MlpModel
    selected_epoch: int
    noisy_val_accuracy: float
    history: List[EpochRecord] = field(default_factory=list)
    first_epoch_loss: Optional[float] = None


class Class2SimiTrainer:
    """Minibatch epoch loop with model selection on noisy-validation accuracy.

    Batches are drawn from a permutation seeded by ``config.seed`` and the
    epoch index, so identical inputs give identical parameters.
    """

    def __init__(
        self,
        config: TrainConfig,
        monitor: Optional[TrainingMonitor] = None,
        evaluator: Optional[Class2SimiEvaluator] = None,
    ):
        self.config = config
        self.monitor = monitor or TrainingMonitor()
        self.evaluator = evaluator or Class2SimiEvaluator()

    def batches(self, n: int, epoch: int) -> Iterator[np.ndarray]:
        rng = np.random.default_rng([self.config.seed, epoch])
        order = rng.permutation(n)
        minimum = 2 if LossKind(self.config.loss_kind).value in PAIRWISE_KINDS else 1
        for start in range(0, n, self.config.batch_size):
            batch = order[start:start + self.config.batch_size]
            if batch.size >= minimum:
                yield batch

    def train(
        self,
        model: MlpModel,
        train_ds: LabeledDataset,
        val_ds: LabeledDataset,
        Tc: Optional[ClassTransitionMatrix] = None,
        Ts: Optional[SimilarityTransitionMatrix] = None,
        test_ds: Optional[LabeledDataset] = None,
        stage: str = "train",
    ) -> TrainResult:
        kind = LossKind(self.config.loss_kind).value
        optimizer = SGDOptimizer(self.config)
        labels = train_ds.training_labels()
        features = train_ds.features

        best_model = model.copy()
        best_acc = -1.0
        best_epoch = 0
        history: List[EpochRecord] = []
        first_epoch_loss = None

        for epoch in range(1, self.config.epochs + 1):
            losses = []
            for batch in self.batches(train_ds.n, epoch):
                loss, grads = loss_and_grad(
                    kind, model, features[batch], labels[batch],
                    Tc=Tc, Ts=Ts,
                    eps=self.config.probability_clamp, w_max=self.config.w_max,
                )
                model = optimizer.step(model, grads)
                losses.append(loss)
            epoch_loss = float(np.mean(losses)) if losses else 0.0
            if epoch == 1:
                first_epoch_loss = epoch_loss

            metrics = self.evaluator.evaluate(model, val_ds, test_ds)
            record = EpochRecord(stage=stage, epoch=epoch, train_loss=epoch_loss, **metrics)
            history.append(record)
            self.monitor.log_training_progress(epoch, {"stage": stage, "loss_kind": kind, **record.model_dump(exclude={"epoch", "stage"})})

            if record.noisy_val_accuracy > best_acc:
                best_acc = record.noisy_val_accuracy
                best_model = model.copy()
                best_epoch = epoch

        return TrainResult(
            model=best_model,
            selected_epoch=best_epoch,
            noisy_val_accuracy=best_acc,
            history=history,
            first_epoch_loss=first_epoch_loss,
        )
