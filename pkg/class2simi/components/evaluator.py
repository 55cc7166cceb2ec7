from __future__ import annotations

from typing import Any, Dict, Optional

import numpy as np
from sklearn.metrics import accuracy_score

from .model import MlpModel, pair_accuracy
from .noise import LabeledDataset
from .pairing import enumerate_pairs


class Class2SimiEvaluator:
    """Accuracy metrics on noisy validation and clean test splits."""

    def accuracy(self, model: MlpModel, X: np.ndarray, labels: np.ndarray) -> float:
        if labels.size == 0:
            return 0.0
        return float(accuracy_score(labels, model.predict(X)))

    def noisy_accuracy(self, model: MlpModel, ds: LabeledDataset) -> float:
        return self.accuracy(model, ds.features, ds.training_labels())

    def clean_accuracy(self, model: MlpModel, ds: Optional[LabeledDataset]) -> Optional[float]:
        if ds is None or ds.clean_labels is None:
            return None
        return self.accuracy(model, ds.features, ds.clean_labels)

    def pair_accuracy(self, model: MlpModel, ds: Optional[LabeledDataset], max_points: int = 500) -> Optional[float]:
        """Agreement of predicted co-membership with clean similarity on the first ``max_points`` points."""
        if ds is None or ds.clean_labels is None or ds.n < 2:
            return None
        take = min(ds.n, max_points)
        pb = enumerate_pairs(ds.clean_labels[:take])
        return pair_accuracy(model.predict_proba(ds.features[:take]), pb.first, pb.second, pb.labels)

    def evaluate(self, model: MlpModel, val: LabeledDataset, test: Optional[LabeledDataset]) -> Dict[str, Any]:
        return {
            "noisy_val_accuracy": self.noisy_accuracy(model, val),
            "clean_test_accuracy": self.clean_accuracy(model, test),
        }
