"""Feedforward softmax classifier written directly against NumPy.

Layers are affine maps ``a @ W + b`` with a hidden activation (ReLU or
Softsign) and a softmax head over c classes. ``forward`` keeps the
activations needed for the backward passes in ``losses``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..errors import CheckpointError, DimensionMismatchError, NumericalError
from ..transition import SimilarityTransitionMatrix

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "class2simi-mlp"
CHECKPOINT_VERSION = 1
ACTIVATIONS = ("relu", "softsign")


# ----------------------
# Activations
# ----------------------

def activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "softsign":
        return z / (1.0 + np.abs(z))
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(z: np.ndarray, kind: str) -> np.ndarray:
    """Derivative of the activation evaluated at the pre-activation ``z``."""
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "softsign":
        return 1.0 / (1.0 + np.abs(z)) ** 2
    raise ValueError(f"unknown activation {kind!r}")


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


# ----------------------
# Model
# ----------------------

@dataclass
class MlpModel:
    """Layer list of (W, b); ``weights[l]`` has shape (fan_in, fan_out)."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: str = "relu"

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatchError("layer count (weights vs biases)", len(self.weights), len(self.biases))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatchError(f"layer {layer} bias length", w.shape[1] if w.ndim == 2 else -1, b.size)
            if layer and w.shape[0] != self.weights[layer - 1].shape[1]:
                raise DimensionMismatchError(f"layer {layer} fan-in", self.weights[layer - 1].shape[1], w.shape[0])

    @classmethod
    def init(cls, dims: Sequence[int], activation: str = "relu", seed: int = 0) -> "MlpModel":
        """He-style normal init; all biases start at zero."""
        if len(dims) < 2:
            raise ValueError("dims needs at least input and output sizes")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
            biases.append(np.zeros(fan_out))
        return cls(weights=weights, biases=biases, activation=activation)

    @classmethod
    def zeros(cls, dims: Sequence[int], activation: str = "relu") -> "MlpModel":
        return cls(
            weights=[np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
            biases=[np.zeros(b) for b in dims[1:]],
            activation=activation,
        )

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.weights[-1].shape[1])

    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [int(w.shape[1]) for w in self.weights]

    def parameters(self) -> List[np.ndarray]:
        """Flat parameter list ordered W0, b0, W1, b1, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return forward(self, X)[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def same_parameters(self, other: "MlpModel") -> bool:
        return self.activation == other.activation and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.parameters(), other.parameters())
        )


@dataclass
class ForwardCache:
    """Layer inputs and pre-activations of one forward pass."""

    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    probs: np.ndarray = None


@dataclass
class Gradients:
    """Per-parameter gradients congruent with ``MlpModel``."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def parameters(self) -> List[np.ndarray]:
        grads = []
        for w, b in zip(self.weights, self.biases):
            grads.extend([w, b])
        return grads

    def check_congruent(self, model: MlpModel) -> None:
        for layer, (g, p) in enumerate(zip(self.parameters(), model.parameters())):
            if g.shape != p.shape:
                raise DimensionMismatchError(f"gradient {layer} size", p.size, g.size)
        if len(self.weights) != len(model.weights):
            raise DimensionMismatchError("gradient layer count", len(model.weights), len(self.weights))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.parameters())


def forward(model: MlpModel, X: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """Softmax probabilities (b x c) and the cache for backprop."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionMismatchError("feature dimension", model.input_dim, X.shape[-1] if X.ndim else 0)
    if not np.all(np.isfinite(X)):
        raise NumericalError("non-finite input features", layer=0)
    cache = ForwardCache()
    a = X
    last = len(model.weights) - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        cache.inputs.append(a)
        z = a @ w + b
        cache.pre_activations.append(z)
        a = z if layer == last else activate(z, model.activation)
    probs = softmax(a)
    cache.probs = probs
    return probs, cache


def backward(model: MlpModel, cache: ForwardCache, grad_probs: np.ndarray) -> Gradients:
    """Backpropagate dL/dprobs through softmax and every layer."""
    probs = cache.probs
    delta = probs * (grad_probs - np.sum(grad_probs * probs, axis=1, keepdims=True))
    n_layers = len(model.weights)
    grad_w: List[np.ndarray] = [None] * n_layers
    grad_b: List[np.ndarray] = [None] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        if not np.all(np.isfinite(delta)):
            raise NumericalError("non-finite gradient", layer=layer)
        grad_w[layer] = cache.inputs[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ model.weights[layer].T) * activation_grad(cache.pre_activations[layer - 1], model.activation)
    return Gradients(weights=grad_w, biases=grad_b)


# ----------------------
# Similarity head
# ----------------------

def pairwise_similarity(p_i: np.ndarray, p_j: np.ndarray) -> Union[float, np.ndarray]:
    """Inner product of two categorical distributions (row-wise for 2-D input)."""
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    if p_i.shape != p_j.shape:
        raise DimensionMismatchError("distribution length", p_i.shape[-1], p_j.shape[-1])
    s = np.clip(np.sum(p_i * p_j, axis=-1), 0.0, 1.0)
    return float(s) if s.ndim == 0 else s


def noisy_similarity(S_hat: Union[float, np.ndarray], Ts: SimilarityTransitionMatrix) -> Union[float, np.ndarray]:
    """P(noisy similar) = T_s,01 (1 - S) + T_s,11 S."""
    s_bar = Ts.t01 * (1.0 - np.asarray(S_hat, dtype=np.float64)) + Ts.t11 * np.asarray(S_hat, dtype=np.float64)
    return float(s_bar) if np.ndim(s_bar) == 0 else s_bar


def pair_accuracy(probs: np.ndarray, first: np.ndarray, second: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of pairs whose argmax agreement matches the similarity label."""
    pred = np.argmax(probs, axis=1)
    agree = (pred[first] == pred[second]).astype(np.int64)
    return float(np.mean(agree == labels)) if labels.size else 0.0


# ----------------------
# Checkpoints
# ----------------------

def model_to_dict(model: MlpModel) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "activation": model.activation,
        "layers": [
            {
                "shape": [int(w.shape[0]), int(w.shape[1])],
                "weight": w.ravel(order="C").tolist(),
                "bias": b.tolist(),
            }
            for w, b in zip(model.weights, model.biases)
        ],
    }


def model_from_dict(payload: dict) -> MlpModel:
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unexpected checkpoint format {payload.get('format')!r}")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')!r}")
    weights, biases = [], []
    try:
        for layer in payload["layers"]:
            rows, cols = layer["shape"]
            weights.append(np.array(layer["weight"], dtype=np.float64).reshape(rows, cols))
            biases.append(np.array(layer["bias"], dtype=np.float64))
        return MlpModel(weights=weights, biases=biases, activation=payload.get("activation", "relu"))
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}")


def save_checkpoint(model: MlpModel, path: Union[str, Path]) -> Path:
    """JSON container; float repr makes the round trip bit-exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model)), encoding="utf-8")
    logger.info(f"Saved checkpoint ({model.num_parameters()} parameters) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> MlpModel:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is not valid JSON: {exc}")
    return model_from_dict(payload)
