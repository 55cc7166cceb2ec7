"""Transition-matrix algebra.

Class transition matrices T_c (c x c, T_c[i, j] = P(noisy=j | clean=i)),
similarity transition matrices T_s (2 x 2, T_s[m, n] = P(noisy sim=n | clean sim=m)),
class priors, the class-to-similarity transform, noise rates, learnability
checks and matrix perturbation.

All functions are pure; randomized ones take an explicit seed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    MatrixValidationError,
    PerturbationError,
    PriorError,
    ValidationException,
)

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9
SINGULARITY_THRESHOLD = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def _check_row_stochastic(entries: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(entries)):
        raise MatrixValidationError(f"{name} has non-finite entries")
    if np.any(entries < 0.0) or np.any(entries > 1.0):
        raise MatrixValidationError(f"{name} has entries outside [0, 1]")
    row_sums = entries.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE)
    if bad.size:
        raise MatrixValidationError(
            f"{name} row {int(bad[0])} sums to {row_sums[bad[0]]!r}, not 1",
            details=[{"row": int(r), "sum": float(row_sums[r])} for r in bad],
        )


# ============================================================================
# Domain types
# ============================================================================

@dataclass(frozen=True)
class ClassTransitionMatrix:
    """Row-stochastic c x c matrix, entries[i, j] = P(noisy label j | clean label i)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise MatrixValidationError(f"class transition matrix must be square, got shape {entries.shape}")
        if entries.shape[0] < 2:
            raise MatrixValidationError("class transition matrix needs c >= 2")
        _check_row_stochastic(entries, "class transition matrix")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def c(self) -> int:
        return int(self.entries.shape[0])

    def to_list(self) -> list:
        return self.entries.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassTransitionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class SimilarityTransitionMatrix:
    """Row-stochastic 2 x 2 matrix, entries[m, n] = P(noisy similarity n | clean similarity m)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.shape != (2, 2):
            raise MatrixValidationError(f"similarity transition matrix must be 2x2, got shape {entries.shape}")
        _check_row_stochastic(entries, "similarity transition matrix")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def t00(self) -> float:
        return float(self.entries[0, 0])

    @property
    def t01(self) -> float:
        return float(self.entries[0, 1])

    @property
    def t10(self) -> float:
        return float(self.entries[1, 0])

    @property
    def t11(self) -> float:
        return float(self.entries[1, 1])

    @classmethod
    def identity(cls) -> "SimilarityTransitionMatrix":
        return cls(np.eye(2))

    def to_list(self) -> list:
        return self.entries.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimilarityTransitionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class ClassPrior:
    """Class probabilities; raw counts are normalized on construction."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).ravel()
        if p.size < 2:
            raise PriorError("class prior needs at least 2 classes")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise PriorError("class prior entries must be finite and non-negative")
        total = p.sum()
        if total <= 0.0:
            raise PriorError("class prior has zero total mass")
        p = p / total
        if abs(p.sum() - 1.0) > ROW_SUM_TOLERANCE:
            raise PriorError("class prior does not normalize to 1")
        object.__setattr__(self, "p", _frozen(p))

    @property
    def c(self) -> int:
        return int(self.p.size)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.p == self.p[0]))

    @classmethod
    def uniform(cls, c: int) -> "ClassPrior":
        return cls(np.ones(c))

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "ClassPrior":
        return cls(np.asarray(counts, dtype=np.float64))

    @classmethod
    def from_labels(cls, labels: Iterable[int], c: int) -> "ClassPrior":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and labels.min() < 0:
            raise PriorError(f"labels must be non-negative, got {int(labels.min())}")
        if labels.size and labels.max() >= c:
            raise DimensionMismatchError("label class count", c, int(labels.max()) + 1)
        return cls(np.bincount(labels, minlength=c))


def _check_same_c(Tc: ClassTransitionMatrix, prior: ClassPrior) -> None:
    if Tc.c != prior.c:
        raise DimensionMismatchError("prior class count", Tc.c, prior.c)


def _as_similarity(t01: float, t11: float) -> SimilarityTransitionMatrix:
    t01 = float(np.clip(t01, 0.0, 1.0))
    t11 = float(np.clip(t11, 0.0, 1.0))
    return SimilarityTransitionMatrix(np.array([[1.0 - t01, t01], [1.0 - t11, t11]]))


# ============================================================================
# Constructors
# ============================================================================

def make_identity(c: int) -> ClassTransitionMatrix:
    if c < 2:
        raise ValidationException("class count must be >= 2")
    return ClassTransitionMatrix(np.eye(c))


def make_symmetric(c: int, rho: float) -> ClassTransitionMatrix:
    """Uniform flips: diagonal 1-rho, every off-diagonal rho/(c-1)."""
    if c < 2:
        raise ValidationException("class count must be >= 2")
    if not (0.0 <= rho < (c - 1) / c):
        raise ValidationException(f"symmetric noise rate must lie in [0, {(c - 1) / c:.6f}), got {rho}")
    entries = np.full((c, c), rho / (c - 1))
    np.fill_diagonal(entries, 1.0 - rho)
    return ClassTransitionMatrix(entries)


def make_asymmetric(c: int, rho: float) -> ClassTransitionMatrix:
    """Cyclic pair flip i -> (i + 1) mod c with probability rho."""
    if c < 2:
        raise ValidationException("class count must be >= 2")
    if not (0.0 <= rho < 1.0):
        raise ValidationException(f"asymmetric noise rate must lie in [0, 1), got {rho}")
    entries = np.eye(c) * (1.0 - rho)
    idx = np.arange(c)
    entries[idx, (idx + 1) % c] += rho
    return ClassTransitionMatrix(entries)


def make_noise_matrix(kind: str, c: int, rho: float = 0.0) -> ClassTransitionMatrix:
    kind = str(kind).lower()
    if kind in ("symmetric", "sym"):
        return make_symmetric(c, rho)
    if kind in ("asymmetric", "asym", "pairflip"):
        return make_asymmetric(c, rho)
    if kind in ("identity", "none", "clean"):
        return make_identity(c)
    raise ValidationException(f"unknown noise kind {kind!r}")


# ============================================================================
# Class -> similarity transform
# ============================================================================

def uniform_class2simi(Tc: ClassTransitionMatrix) -> SimilarityTransitionMatrix:
    """Closed form for a balanced dataset."""
    T = Tc.entries
    c = Tc.c
    fro2 = float(np.sum(T * T))
    col_sq = float(np.sum(T.sum(axis=0) ** 2))
    t11 = fro2 / c
    t01 = (col_sq - fro2) / (c * c - c)
    return _as_similarity(t01, t11)


def weighted_class2simi(Tc: ClassTransitionMatrix, prior: ClassPrior) -> SimilarityTransitionMatrix:
    """Prior-weighted transform.

    T_s,11 = sum_i p_i^2 <T_i, T_i> / sum_i p_i^2
    T_s,01 = sum_{i != i'} p_i p_i' <T_i, T_i'> / sum_{i != i'} p_i p_i'
    """
    _check_same_c(Tc, prior)
    T = Tc.entries
    p = prior.p
    gram = T @ T.T
    w2 = p * p
    s_den = float(np.sum(w2))
    s_num = float(np.sum(w2 * np.diag(gram)))

    off = ~np.eye(Tc.c, dtype=bool)
    pair_w = np.outer(p, p)
    d_den = float(np.sum(pair_w[off]))
    if d_den <= ROW_SUM_TOLERANCE:
        raise PriorError("prior puts all mass on one class; dissimilar pairs are undefined")
    d_num = float(np.sum(pair_w[off] * gram[off]))
    return _as_similarity(d_num / d_den, s_num / s_den)


def class2simi(Tc: ClassTransitionMatrix, prior: Optional[ClassPrior] = None) -> SimilarityTransitionMatrix:
    """Similarity transition matrix induced by ``Tc`` under ``prior`` (uniform if omitted)."""
    if prior is None:
        prior = ClassPrior.uniform(Tc.c)
    _check_same_c(Tc, prior)
    if prior.is_uniform:
        return uniform_class2simi(Tc)
    return weighted_class2simi(Tc, prior)


def simi_transition_oracle(Tc: ClassTransitionMatrix, prior: Optional[ClassPrior] = None) -> SimilarityTransitionMatrix:
    """Brute-force P(noisy sim | clean sim) by summing over ordered clean class pairs
    and every pair of noisy outcomes. Independent of ``class2simi``; used to cross-check it.
    """
    if prior is None:
        prior = ClassPrior.uniform(Tc.c)
    _check_same_c(Tc, prior)
    T = Tc.entries
    p = prior.p
    c = Tc.c
    agree = np.eye(c, dtype=bool)

    mass = np.zeros(2)          # P(H = m)
    joint = np.zeros((2, 2))    # P(H = m, H_bar = n)
    for i in range(c):
        for k in range(c):
            w = p[i] * p[k]
            if w == 0.0:
                continue
            m = 1 if i == k else 0
            outcomes = np.outer(T[i], T[k])
            p_similar = float(outcomes[agree].sum())
            mass[m] += w
            joint[m, 1] += w * p_similar
            joint[m, 0] += w * (1.0 - p_similar)
    if mass[0] <= ROW_SUM_TOLERANCE:
        raise PriorError("prior puts all mass on one class; dissimilar pairs are undefined")
    if mass[1] <= 0.0:
        raise PriorError("prior has no similar-pair mass")
    return _as_similarity(joint[0, 1] / mass[0], joint[1, 1] / mass[1])


# ============================================================================
# Noise rates
# ============================================================================

def class_noise_rate(Tc: ClassTransitionMatrix, prior: Optional[ClassPrior] = None) -> float:
    """Expected fraction of flipped class labels, sum_i p_i (1 - T_ii)."""
    if prior is None:
        prior = ClassPrior.uniform(Tc.c)
    _check_same_c(Tc, prior)
    return float(np.clip(np.sum(prior.p * (1.0 - np.diag(Tc.entries))), 0.0, 1.0))


def pair_similar_prior(prior: ClassPrior) -> float:
    """Probability that two i.i.d. draws share a class, sum_i p_i^2."""
    return float(np.sum(prior.p * prior.p))


def simi_noise_rate(Ts: SimilarityTransitionMatrix, pair_similar_prior: float) -> float:
    if not (0.0 <= pair_similar_prior <= 1.0):
        raise ValidationException(f"pair similar prior must lie in [0, 1], got {pair_similar_prior}")
    return float(pair_similar_prior * Ts.t10 + (1.0 - pair_similar_prior) * Ts.t01)


def simi_noise_rates_by_pair_type(Ts: SimilarityTransitionMatrix) -> Dict[str, float]:
    """Noise rate among s-pairs (clean similar) and d-pairs (clean dissimilar)."""
    return {"s_pair_noise_rate": Ts.t10, "d_pair_noise_rate": Ts.t01}


# ============================================================================
# Learnability
# ============================================================================

@dataclass(frozen=True)
class LearnabilityReport:
    tc_invertible: bool
    tc_condition_estimate: float
    tc_min_singular_value: float
    ts_learnable: bool
    ts_diagonal_sum: float

    def to_dict(self) -> Dict[str, Any]:
        cond = self.tc_condition_estimate
        return {
            "tc_invertible": self.tc_invertible,
            "tc_condition_estimate": None if not np.isfinite(cond) else cond,
            "tc_min_singular_value": self.tc_min_singular_value,
            "ts_learnable": self.ts_learnable,
            "ts_diagonal_sum": self.ts_diagonal_sum,
        }


def is_learnable(Ts: SimilarityTransitionMatrix) -> bool:
    return Ts.t00 + Ts.t11 > 1.0


def learnability_check(Tc: ClassTransitionMatrix, Ts: SimilarityTransitionMatrix) -> LearnabilityReport:
    singular_values = np.linalg.svd(Tc.entries, compute_uv=False)
    s_min = float(singular_values[-1])
    s_max = float(singular_values[0])
    invertible = s_min > SINGULARITY_THRESHOLD
    condition = s_max / s_min if invertible else float("inf")
    return LearnabilityReport(
        tc_invertible=invertible,
        tc_condition_estimate=condition,
        tc_min_singular_value=s_min,
        ts_learnable=is_learnable(Ts),
        ts_diagonal_sum=Ts.t00 + Ts.t11,
    )


# ============================================================================
# Perturbation
# ============================================================================

PERTURB_MODES = ("deviation", "multiplier")


def perturb_tc(
    Tc: ClassTransitionMatrix,
    level: float,
    seed: int,
    mode: str = "deviation",
    noop: bool = False,
) -> ClassTransitionMatrix:
    """Multiply every entry by a random factor, clamp negatives to 0, renormalize rows.

    ``deviation``: alpha = 1 + s * u, u ~ U[level, level + 0.1], s = +-1.
    ``multiplier``: alpha = s * u, u ~ U[1 + level, 1 + level + 0.1], s = +-1.
    ``noop`` returns ``Tc`` unchanged.
    """
    if noop:
        return Tc
    if level < 0.0 or abs(level * 10.0 - round(level * 10.0)) > 1e-9:
        raise ValidationException(f"perturbation level must be a non-negative multiple of 0.1, got {level}")
    if mode not in PERTURB_MODES:
        raise ValidationException(f"unknown perturbation mode {mode!r}")

    rng = np.random.default_rng(seed)
    shape = Tc.entries.shape
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    if mode == "deviation":
        magnitude = rng.uniform(level, level + 0.1, size=shape)
        alpha = 1.0 + signs * magnitude
    else:
        magnitude = rng.uniform(1.0 + level, 1.0 + level + 0.1, size=shape)
        alpha = signs * magnitude

    perturbed = np.clip(Tc.entries * alpha, 0.0, None)
    row_sums = perturbed.sum(axis=1)
    for row in np.flatnonzero(row_sums <= 0.0):
        raise PerturbationError(int(row))
    perturbed = perturbed / row_sums[:, None]
    logger.debug(f"Perturbed {Tc.c}x{Tc.c} matrix at level {level} ({mode})")
    return ClassTransitionMatrix(perturbed)


def random_transition_matrix(
    c: int,
    rng: np.random.Generator,
    diagonally_dominant: bool = False,
) -> ClassTransitionMatrix:
    """Random row-stochastic matrix; with ``diagonally_dominant`` every T_ii lies in (0.5, 1)."""
    if not diagonally_dominant:
        return ClassTransitionMatrix(rng.dirichlet(np.ones(c), size=c))
    entries = np.zeros((c, c))
    for i in range(c):
        diag = rng.uniform(0.5, 1.0)
        while diag <= 0.5:
            diag = rng.uniform(0.5, 1.0)
        rest = rng.dirichlet(np.ones(c - 1)) * (1.0 - diag)
        entries[i] = np.insert(rest, i, diag)
    return ClassTransitionMatrix(entries)


# ============================================================================
# Matrix file format
# ============================================================================

def format_decimal(value: float) -> str:
    return np.format_float_positional(float(value), unique=True, trim="-")


def matrix_text(Tc: Union[ClassTransitionMatrix, SimilarityTransitionMatrix]) -> str:
    """First line: dimension. Then one space-separated row per line."""
    entries = Tc.entries
    lines = [str(entries.shape[0])]
    lines.extend(" ".join(format_decimal(v) for v in row) for row in entries)
    return "\n".join(lines) + "\n"


def write_matrix(path: Union[str, Path], Tc: Union[ClassTransitionMatrix, SimilarityTransitionMatrix]) -> Path:
    path = Path(path)
    path.write_text(matrix_text(Tc), encoding="utf-8")
    return path


def parse_matrix(text: str) -> np.ndarray:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise MatrixValidationError("matrix file is empty")
    try:
        c = int(lines[0])
    except ValueError:
        raise MatrixValidationError(f"first line must be the dimension, got {lines[0]!r}")
    if len(lines) - 1 != c:
        raise MatrixValidationError(f"expected {c} matrix rows, found {len(lines) - 1}")
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split()
        if len(cells) != c:
            raise MatrixValidationError(f"line {line_no}: expected {c} values, found {len(cells)}")
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError:
            raise MatrixValidationError(f"line {line_no}: non-numeric value")
    return np.array(rows, dtype=np.float64)


def read_matrix(path: Union[str, Path]) -> ClassTransitionMatrix:
    path = Path(path)
    if not path.exists():
        raise MatrixValidationError(f"matrix file not found: {path}")
    return ClassTransitionMatrix(parse_matrix(path.read_text(encoding="utf-8")))


def transform_report(Tc: ClassTransitionMatrix, prior: Optional[ClassPrior] = None) -> Dict[str, Any]:
    """T_s plus noise rates and learnability for one class transition matrix."""
    if prior is None:
        prior = ClassPrior.uniform(Tc.c)
    Ts = class2simi(Tc, prior)
    similar_prior = pair_similar_prior(prior)
    return {
        "c": Tc.c,
        "prior": prior.p.tolist(),
        "ts": Ts.to_list(),
        "class_noise_rate": class_noise_rate(Tc, prior),
        "pair_similar_prior": similar_prior,
        "simi_noise_rate": simi_noise_rate(Ts, similar_prior),
        **simi_noise_rates_by_pair_type(Ts),
        "learnability": learnability_check(Tc, Ts).to_dict(),
    }
