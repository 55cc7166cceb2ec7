"""Pointwise and pairwise training losses with exact gradients.

Each loss is computed from the softmax output ``probs`` and comes with a
``*_dprobs`` twin returning dL/dprobs; ``model.backward`` carries that
through softmax and the layers. All losses are means over the batch (or
over the enumerated pairs). Log arguments are clamped to [eps, 1 - eps]
and the gradient is zero wherever the clamp is active.
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..errors import DatasetError, DimensionMismatchError, InvalidLabelError, NotLearnableError, NumericalError
from ..transition import ClassTransitionMatrix, SimilarityTransitionMatrix, is_learnable
from .model import Gradients, MlpModel, backward, forward
from .pairing import PairBatch, enumerate_pairs

DEFAULT_EPS = 1e-7
DEFAULT_W_MAX = 10.0

POINTWISE_KINDS = ("ce", "forward_pointwise", "reweight_pointwise")
PAIRWISE_KINDS = ("f_class2simi", "r_class2simi")
LOSS_KINDS = POINTWISE_KINDS + PAIRWISE_KINDS


def _clamp(values: np.ndarray, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """Clamped values and a 0/1 mask that is 1 where the clamp is inactive."""
    clamped = np.clip(values, eps, 1.0 - eps)
    return clamped, (clamped == values).astype(np.float64)


def _check_labels(labels: np.ndarray, probs: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size != probs.shape[0]:
        raise DimensionMismatchError("label count", probs.shape[0], labels.size)
    if labels.size and (np.any(labels < 0) or np.any(labels >= probs.shape[1])):
        bad = labels[(labels < 0) | (labels >= probs.shape[1])][0]
        raise InvalidLabelError(f"label {int(bad)} out of range for c={probs.shape[1]}")
    return labels.astype(np.int64)


def _check_pairs(pair_batch: PairBatch, probs: np.ndarray) -> None:
    if len(pair_batch) == 0:
        raise DatasetError("pair batch is empty")
    if pair_batch.batch_size != probs.shape[0]:
        raise DimensionMismatchError("pair batch size", probs.shape[0], pair_batch.batch_size)


def _check_tc(Tc: ClassTransitionMatrix, probs: np.ndarray) -> None:
    if Tc.c != probs.shape[1]:
        raise DimensionMismatchError("transition matrix size", probs.shape[1], Tc.c)


# ----------------------
# Cross-entropy on noisy labels
# ----------------------

def ce_dprobs(probs: np.ndarray, labels: np.ndarray, eps: float = DEFAULT_EPS) -> Tuple[float, np.ndarray]:
    labels = _check_labels(labels, probs)
    rows = np.arange(labels.size)
    picked, mask = _clamp(probs[rows, labels], eps)
    loss = float(-np.mean(np.log(picked)))
    grad = np.zeros_like(probs)
    grad[rows, labels] = -mask / (picked * labels.size)
    return loss, grad


def loss_ce(model: MlpModel, X: np.ndarray, labels: np.ndarray, eps: float = DEFAULT_EPS) -> float:
    return ce_dprobs(forward(model, X)[0], labels, eps)[0]


def grad_ce(model: MlpModel, X: np.ndarray, labels: np.ndarray, eps: float = DEFAULT_EPS) -> Gradients:
    probs, cache = forward(model, X)
    return backward(model, cache, ce_dprobs(probs, labels, eps)[1])


# ----------------------
# Pointwise forward correction
# ----------------------

def forward_pointwise_dprobs(
    probs: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix, eps: float = DEFAULT_EPS
) -> Tuple[float, np.ndarray]:
    """CE against q = Tc^T f(x), i.e. q_j = sum_i f(x)_i Tc[i, j]."""
    _check_tc(Tc, probs)
    q = probs @ Tc.entries
    loss, grad_q = ce_dprobs(q, labels, eps)
    return loss, grad_q @ Tc.entries.T


def loss_forward_pointwise(
    model: MlpModel, X: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix, eps: float = DEFAULT_EPS
) -> float:
    return forward_pointwise_dprobs(forward(model, X)[0], labels, Tc, eps)[0]


def grad_forward_pointwise(
    model: MlpModel, X: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix, eps: float = DEFAULT_EPS
) -> Gradients:
    probs, cache = forward(model, X)
    return backward(model, cache, forward_pointwise_dprobs(probs, labels, Tc, eps)[1])


# ----------------------
# Pointwise importance reweighting
# ----------------------

def reweight_pointwise_weights(
    probs: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> np.ndarray:
    """beta_k = f(x_k)[y_k] / (Tc^T f(x_k))[y_k], clipped to [0, w_max]."""
    _check_tc(Tc, probs)
    labels = _check_labels(labels, probs)
    rows = np.arange(labels.size)
    clean = np.clip(probs[rows, labels], eps, 1.0 - eps)
    noisy = np.clip((probs @ Tc.entries)[rows, labels], eps, 1.0 - eps)
    return np.clip(clean / noisy, 0.0, w_max)


def reweight_pointwise_dprobs(
    probs: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> Tuple[float, np.ndarray]:
    beta = reweight_pointwise_weights(probs, labels, Tc, eps, w_max)
    labels = _check_labels(labels, probs)
    rows = np.arange(labels.size)
    picked, mask = _clamp(probs[rows, labels], eps)
    loss = float(np.mean(-beta * np.log(picked)))
    grad = np.zeros_like(probs)
    grad[rows, labels] = -beta * mask / (picked * labels.size)
    return loss, grad


def loss_reweight_pointwise(
    model: MlpModel, X: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> float:
    return reweight_pointwise_dprobs(forward(model, X)[0], labels, Tc, eps, w_max)[0]


def grad_reweight_pointwise(
    model: MlpModel, X: np.ndarray, labels: np.ndarray, Tc: ClassTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> Gradients:
    probs, cache = forward(model, X)
    return backward(model, cache, reweight_pointwise_dprobs(probs, labels, Tc, eps, w_max)[1])


# ----------------------
# Pairwise: forward-corrected similarity loss
# ----------------------

def _similarities(pair_batch: PairBatch, probs: np.ndarray) -> np.ndarray:
    return np.clip(np.sum(probs[pair_batch.first] * probs[pair_batch.second], axis=1), 0.0, 1.0)


def _scatter_pair_grad(pair_batch: PairBatch, probs: np.ndarray, grad_s: np.ndarray) -> np.ndarray:
    """dL/dprobs from dL/dS_ij, with S_ij = <p_i, p_j>."""
    grad = np.zeros_like(probs)
    np.add.at(grad, pair_batch.first, grad_s[:, None] * probs[pair_batch.second])
    np.add.at(grad, pair_batch.second, grad_s[:, None] * probs[pair_batch.first])
    return grad


def c2s_similarity_grad(
    S_hat: np.ndarray, labels: np.ndarray, Ts: SimilarityTransitionMatrix, eps: float = DEFAULT_EPS
) -> np.ndarray:
    """Per-pair derivative of -[h log s_bar + (1-h) log(1-s_bar)] w.r.t. S_hat."""
    S_hat = np.asarray(S_hat, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    s_bar, mask = _clamp(Ts.t01 + (Ts.t11 - Ts.t01) * S_hat, eps)
    d_sbar = -labels / s_bar + (1.0 - labels) / (1.0 - s_bar)
    return d_sbar * mask * (Ts.t11 - Ts.t01)


def c2s_dprobs(
    pair_batch: PairBatch, probs: np.ndarray, Ts: SimilarityTransitionMatrix, eps: float = DEFAULT_EPS
) -> Tuple[float, np.ndarray]:
    _check_pairs(pair_batch, probs)
    h = pair_batch.labels.astype(np.float64)
    S_hat = _similarities(pair_batch, probs)
    s_bar, _ = _clamp(Ts.t01 + (Ts.t11 - Ts.t01) * S_hat, eps)
    loss = float(-np.mean(h * np.log(s_bar) + (1.0 - h) * np.log(1.0 - s_bar)))
    grad_s = c2s_similarity_grad(S_hat, h, Ts, eps) / len(pair_batch)
    return loss, _scatter_pair_grad(pair_batch, probs, grad_s)


def loss_c2s(pair_batch: PairBatch, probs: np.ndarray, Ts: SimilarityTransitionMatrix, eps: float = DEFAULT_EPS) -> float:
    """Mean binary cross-entropy between noisy similarity labels and T_s-corrected similarities."""
    return c2s_dprobs(pair_batch, np.asarray(probs, dtype=np.float64), Ts, eps)[0]


def grad_c2s(
    pair_batch: PairBatch, model: MlpModel, X: np.ndarray, Ts: SimilarityTransitionMatrix, eps: float = DEFAULT_EPS
) -> Gradients:
    probs, cache = forward(model, X)
    return backward(model, cache, c2s_dprobs(pair_batch, probs, Ts, eps)[1])


# ----------------------
# Pairwise: importance-reweighted similarity loss
# ----------------------

def r_c2s_weights(
    S_hat: np.ndarray, labels: np.ndarray, Ts: SimilarityTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> np.ndarray:
    """beta = P(H = h | pair) / P(H_bar = h | pair) from the clean head and Ts."""
    S_hat = np.asarray(S_hat, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    s_bar = Ts.t01 + (Ts.t11 - Ts.t01) * S_hat
    clean = np.clip(np.where(labels == 1, S_hat, 1.0 - S_hat), eps, 1.0 - eps)
    noisy = np.clip(np.where(labels == 1, s_bar, 1.0 - s_bar), eps, 1.0 - eps)
    return np.clip(clean / noisy, 0.0, w_max)


def r_c2s_dprobs(
    pair_batch: PairBatch, probs: np.ndarray, Ts: SimilarityTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> Tuple[float, np.ndarray]:
    _check_pairs(pair_batch, probs)
    if not is_learnable(Ts):
        raise NotLearnableError(Ts.t00 + Ts.t11)
    h = pair_batch.labels.astype(np.float64)
    S_hat = _similarities(pair_batch, probs)
    beta = r_c2s_weights(S_hat, h, Ts, eps, w_max)
    s, mask = _clamp(S_hat, eps)
    loss = float(np.mean(-beta * (h * np.log(s) + (1.0 - h) * np.log(1.0 - s))))
    grad_s = beta * mask * (-h / s + (1.0 - h) / (1.0 - s)) / len(pair_batch)
    return loss, _scatter_pair_grad(pair_batch, probs, grad_s)


def loss_r_class2simi(
    pair_batch: PairBatch, probs: np.ndarray, Ts: SimilarityTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> float:
    return r_c2s_dprobs(pair_batch, np.asarray(probs, dtype=np.float64), Ts, eps, w_max)[0]


def grad_r_class2simi(
    pair_batch: PairBatch, model: MlpModel, X: np.ndarray, Ts: SimilarityTransitionMatrix,
    eps: float = DEFAULT_EPS, w_max: float = DEFAULT_W_MAX,
) -> Gradients:
    probs, cache = forward(model, X)
    return backward(model, cache, r_c2s_dprobs(pair_batch, probs, Ts, eps, w_max)[1])


# ----------------------
# Dispatcher
# ----------------------

def loss_and_grad(
    kind: str,
    model: MlpModel,
    X: np.ndarray,
    labels: np.ndarray,
    Tc: Optional[ClassTransitionMatrix] = None,
    Ts: Optional[SimilarityTransitionMatrix] = None,
    eps: float = DEFAULT_EPS,
    w_max: float = DEFAULT_W_MAX,
) -> Tuple[float, Gradients]:
    """One forward/backward pass for any supported loss kind.

    Pairwise kinds enumerate every i < j pair of the batch from ``labels``.
    """
    kind = getattr(kind, "value", kind)
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")
    if kind in ("forward_pointwise", "reweight_pointwise") and Tc is None:
        raise ValueError(f"loss kind {kind!r} needs a class transition matrix")
    if kind in PAIRWISE_KINDS and Ts is None:
        raise ValueError(f"loss kind {kind!r} needs a similarity transition matrix")

    probs, cache = forward(model, X)
    if kind == "ce":
        loss, grad_probs = ce_dprobs(probs, labels, eps)
    elif kind == "forward_pointwise":
        loss, grad_probs = forward_pointwise_dprobs(probs, labels, Tc, eps)
    elif kind == "reweight_pointwise":
        loss, grad_probs = reweight_pointwise_dprobs(probs, labels, Tc, eps, w_max)
    else:
        pair_batch = enumerate_pairs(_check_labels(labels, probs))
        if kind == "f_class2simi":
            loss, grad_probs = c2s_dprobs(pair_batch, probs, Ts, eps)
        else:
            loss, grad_probs = r_c2s_dprobs(pair_batch, probs, Ts, eps, w_max)
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite {kind} loss")
    return loss, backward(model, cache, grad_probs)
