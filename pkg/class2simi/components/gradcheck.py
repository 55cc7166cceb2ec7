"""Central finite-difference check of analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from .model import Gradients, MlpModel

DEFAULT_STEP = 1e-5


@dataclass
class GradCheckResult:
    max_relative_error: float
    per_parameter: List[float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_relative_error": self.max_relative_error,
            "per_parameter": self.per_parameter,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a|| + ||n||, 1e-12)"""
    denom = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)


def numeric_gradients(
    loss_fn: Callable[[MlpModel], float], model: MlpModel, step: float = DEFAULT_STEP
) -> Gradients:
    perturbed = model.copy()
    numeric = []
    for param in perturbed.parameters():
        grad = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = param[idx]
            param[idx] = original + step
            plus = loss_fn(perturbed)
            param[idx] = original - step
            minus = loss_fn(perturbed)
            param[idx] = original
            grad[idx] = (plus - minus) / (2.0 * step)
            it.iternext()
        numeric.append(grad)
    return Gradients(weights=numeric[0::2], biases=numeric[1::2])


def check_gradients(
    loss_fn: Callable[[MlpModel], float],
    grad_fn: Callable[[MlpModel], Gradients],
    model: MlpModel,
    step: float = DEFAULT_STEP,
    tolerance: float = 1e-4,
) -> GradCheckResult:
    analytic = grad_fn(model)
    numeric = numeric_gradients(loss_fn, model, step)
    errors = [relative_error(a, n) for a, n in zip(analytic.parameters(), numeric.parameters())]
    return GradCheckResult(max_relative_error=max(errors), per_parameter=errors, tolerance=tolerance)
