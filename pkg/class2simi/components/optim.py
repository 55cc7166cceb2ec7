"""Momentum SGD with decoupled weight decay."""
from __future__ import annotations

from typing import List, Optional, Protocol, Tuple

import numpy as np

from ..errors import NumericalError
from .model import Gradients, MlpModel


class OptimizerSettings(Protocol):
    learning_rate: float
    momentum: float
    weight_decay: float


Velocity = List[np.ndarray]


def sgd_step(
    model: MlpModel,
    grads: Gradients,
    config: OptimizerSettings,
    velocity: Optional[Velocity] = None,
) -> Tuple[MlpModel, Velocity]:
    """One update: v <- mu v + g;  W <- W - lr v - lr wd W.

    Weight decay touches weight matrices only, not biases. Returns a new
    model and the new velocity; the inputs are left untouched.
    """
    grads.check_congruent(model)
    if not grads.is_finite():
        raise NumericalError("non-finite gradient passed to the optimizer")
    params = model.parameters()
    if velocity is None:
        velocity = [np.zeros_like(p) for p in params]

    lr, mu, wd = config.learning_rate, config.momentum, config.weight_decay
    new_params, new_velocity = [], []
    for index, (p, g, v) in enumerate(zip(params, grads.parameters(), velocity)):
        v_next = mu * v + g
        update = lr * v_next
        if index % 2 == 0 and wd:
            update = update + lr * wd * p
        new_params.append(p - update)
        new_velocity.append(v_next)

    for index, p in enumerate(new_params):
        if not np.all(np.isfinite(p)):
            raise NumericalError("non-finite parameter after update", layer=index // 2)
    updated = MlpModel(weights=new_params[0::2], biases=new_params[1::2], activation=model.activation)
    return updated, new_velocity


class SGDOptimizer:
    """Stateful wrapper keeping the momentum buffer between steps."""

    def __init__(self, config: OptimizerSettings):
        self.config = config
        self.velocity: Optional[Velocity] = None
        self.steps = 0

    def step(self, model: MlpModel, grads: Gradients) -> MlpModel:
        model, self.velocity = sgd_step(model, grads, self.config, self.velocity)
        self.steps += 1
        return model

    def reset(self) -> None:
        self.velocity = None
        self.steps = 0
