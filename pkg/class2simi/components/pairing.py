"""Pairwise enumeration of a minibatch.

Every unordered pair (i, j), i < j, of the batch gets a similarity label
1[y_i == y_j] computed from the (noisy) class labels. Self-pairs are
excluded: their label is always 1 whatever the noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from ..errors import DatasetError


@dataclass(frozen=True)
class PairBatch:
    first: np.ndarray
    second: np.ndarray
    labels: np.ndarray
    batch_size: int

    def __post_init__(self):
        for name in ("first", "second", "labels"):
            array = np.array(getattr(self, name), dtype=np.int64, copy=True)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if not (self.first.shape == self.second.shape == self.labels.shape):
            raise DatasetError("pair index and label arrays must have equal length")
        if self.first.size and (
            np.any(self.first >= self.second) or self.second.max() >= self.batch_size or self.first.min() < 0
        ):
            raise DatasetError("pairs must satisfy 0 <= i < j < batch_size")
        if self.labels.size and not np.all((self.labels == 0) | (self.labels == 1)):
            raise DatasetError("similarity labels must be 0 or 1")

    @property
    def pairs(self) -> list:
        return list(zip(self.first.tolist(), self.second.tolist()))

    def __len__(self) -> int:
        return int(self.labels.size)


def similarity_label(y_i: int, y_j: int) -> int:
    return int(y_i == y_j)


def enumerate_pairs(labels: Sequence[int]) -> PairBatch:
    """All i < j pairs in lexicographic order with labels 1[y_i == y_j]."""
    labels = np.asarray(labels, dtype=np.int64)
    b = int(labels.size)
    if b < 2:
        raise DatasetError(f"need at least 2 points to enumerate pairs, got {b}")
    first, second = np.triu_indices(b, k=1)
    return PairBatch(
        first=first,
        second=second,
        labels=(labels[first] == labels[second]).astype(np.int64),
        batch_size=b,
    )


def pair_class_balance(pb: PairBatch) -> Dict[str, float]:
    if len(pb) == 0:
        raise DatasetError("pair batch is empty")
    return {"similar_fraction": float(np.mean(pb.labels))}
