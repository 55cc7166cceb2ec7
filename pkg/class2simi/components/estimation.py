"""Anchor-point estimation of the class transition matrix.

A model g trained on noisy labels approximates P(noisy y | x). For an
anchor x of class i (clean posterior close to one-hot on i) that noisy
posterior equals row i of T_c, so each row is read off g at the pool
instance scoring highest (or at a high percentile) for class i.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from ..errors import DimensionMismatchError, EstimationError
from ..transition import ClassPrior, ClassTransitionMatrix, SimilarityTransitionMatrix, class2simi
from .noise import blob_means

logger = logging.getLogger(__name__)

DEFAULT_PERCENTILE = 97.0


class PosteriorModel(Protocol):
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        ...


def anchor_indices(probs: np.ndarray, percentile: float = DEFAULT_PERCENTILE) -> np.ndarray:
    """Pool index of the anchor chosen for every class.

    Below 100 the anchor is the instance whose score is the percentile
    value, i.e. the smallest score at or above the threshold, so tied or
    saturated top scores still yield a point of that class. 100 is the
    hard argmax.
    """
    if not (0.0 < percentile <= 100.0):
        raise ValueError(f"percentile must lie in (0, 100], got {percentile}")
    n, c = probs.shape
    anchors = np.empty(c, dtype=np.int64)
    for i in range(c):
        column = probs[:, i]
        if column.max() <= 0.0:
            raise EstimationError(f"class {i} has no positive-probability anchor candidate", class_index=i)
        if percentile >= 100.0 or column.min() == column.max():
            anchors[i] = int(np.argmax(column))
            continue
        threshold = np.percentile(column, percentile, method="higher")
        candidates = np.flatnonzero(column >= threshold)
        anchors[i] = int(candidates[np.argmin(column[candidates])])
    return anchors


def estimate_tc_anchor(
    g: PosteriorModel,
    X_pool: np.ndarray,
    percentile: float = DEFAULT_PERCENTILE,
) -> ClassTransitionMatrix:
    X_pool = np.asarray(X_pool, dtype=np.float64)
    if X_pool.ndim != 2 or X_pool.shape[0] == 0:
        raise EstimationError("anchor pool is empty")
    probs = np.asarray(g.predict_proba(X_pool), dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] != X_pool.shape[0]:
        raise DimensionMismatchError("posterior rows", X_pool.shape[0], probs.shape[0] if probs.ndim else 0)
    if not np.all(np.isfinite(probs)):
        raise EstimationError("posterior model returned non-finite probabilities")

    anchors = anchor_indices(probs, percentile)
    rows = np.clip(probs[anchors], 0.0, None)
    rows = rows / rows.sum(axis=1, keepdims=True)
    logger.info(f"Estimated T_c from {X_pool.shape[0]} pool points (percentile={percentile})")
    return ClassTransitionMatrix(rows)


def estimate_ts(Tc_hat: ClassTransitionMatrix, prior: Optional[ClassPrior] = None) -> SimilarityTransitionMatrix:
    return class2simi(Tc_hat, prior)


def estimation_error(Tc_hat: ClassTransitionMatrix, Tc: ClassTransitionMatrix) -> float:
    """Largest absolute entry difference."""
    if Tc_hat.c != Tc.c:
        raise DimensionMismatchError("transition matrix size", Tc.c, Tc_hat.c)
    return float(np.max(np.abs(Tc_hat.entries - Tc.entries)))


@dataclass
class BlobPosterior:
    """Exact noisy posterior of an isotropic Gaussian blob mixture.

    P(y | x) follows from the blob likelihoods and the prior; the noisy
    posterior is P(y | x) @ T_c.
    """

    means: np.ndarray
    spread: float
    Tc: ClassTransitionMatrix
    prior: Optional[ClassPrior] = None

    @classmethod
    def for_blobs(
        cls, c: int, d: int, separation: float, spread: float, Tc: ClassTransitionMatrix
    ) -> "BlobPosterior":
        return cls(means=blob_means(c, d, separation), spread=spread, Tc=Tc)

    def clean_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        sq_dist = ((X[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        logits = -sq_dist / (2.0 * self.spread ** 2)
        if self.prior is not None:
            logits = logits + np.log(np.clip(self.prior.p, 1e-300, None))
        logits = logits - logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        return weights / weights.sum(axis=1, keepdims=True)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.clean_proba(X) @ self.Tc.entries
