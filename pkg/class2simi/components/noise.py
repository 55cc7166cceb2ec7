"""Synthetic data generation, label corruption and CSV ingestion.

Blob datasets stand in for image/text benchmarks; labels are corrupted by
sampling each noisy label from the clean label's row of a class transition
matrix.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from ..errors import (
    CsvFormatError,
    DatasetError,
    DimensionMismatchError,
    InvalidLabelError,
    MissingCellError,
    NegativeLabelError,
    NonNumericCellError,
    RaggedRowError,
)
from ..transition import (
    ClassPrior,
    ClassTransitionMatrix,
    class2simi,
    class_noise_rate,
    pair_similar_prior,
    simi_noise_rate,
)

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    c: int
    clean_labels: Optional[np.ndarray] = None
    noisy_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] < 1:
            raise DatasetError(f"features must be an n x d matrix with d >= 1, got shape {features.shape}")
        if self.c < 2:
            raise DatasetError("class count must be >= 2")
        if self.clean_labels is None and self.noisy_labels is None:
            raise DatasetError("dataset needs clean or noisy labels")
        object.__setattr__(self, "features", _frozen(features, np.float64))
        for name in ("clean_labels", "noisy_labels"):
            labels = getattr(self, name)
            if labels is None:
                continue
            labels = np.asarray(labels)
            if labels.shape != (features.shape[0],):
                raise DimensionMismatchError(f"{name} length", features.shape[0], int(labels.size))
            if labels.size and (labels.min() < 0 or labels.max() >= self.c):
                raise InvalidLabelError(f"{name} must lie in [0, {self.c})")
            object.__setattr__(self, name, _frozen(labels, np.int64))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            features=self.features[indices],
            c=self.c,
            clean_labels=None if self.clean_labels is None else self.clean_labels[indices],
            noisy_labels=None if self.noisy_labels is None else self.noisy_labels[indices],
        )

    def training_labels(self) -> np.ndarray:
        """Noisy labels when present, otherwise clean ones."""
        return self.noisy_labels if self.noisy_labels is not None else self.clean_labels


# ============================================================================
# Generation
# ============================================================================

def blob_means(c: int, d: int, separation: float) -> np.ndarray:
    """Circle layout for d == 2; signed, scaled standard-basis directions for d > 2."""
    means = np.zeros((c, d))
    if d == 2:
        angles = 2.0 * np.pi * np.arange(c) / c
        means[:, 0] = separation * np.cos(angles)
        means[:, 1] = separation * np.sin(angles)
        return means
    for k in range(c):
        axis = k % d
        sign = 1.0 if (k // d) % 2 == 0 else -1.0
        shell = 1.0 + k // (2 * d)
        means[k, axis] = sign * separation * shell
    return means


def generate_blobs(
    c: int,
    per_class: int,
    d: int,
    separation: float,
    spread: float,
    seed: int,
) -> LabeledDataset:
    if c < 2 or per_class < 1 or d < 2:
        raise DatasetError("generate_blobs needs c >= 2, per_class >= 1, d >= 2")
    if separation <= 0 or spread <= 0:
        raise DatasetError("separation and spread must be positive")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(c), per_class)
    features = blob_means(c, d, separation)[labels] + spread * rng.standard_normal((labels.size, d))
    logger.debug(f"Generated {labels.size} blob points (c={c}, d={d}, seed={seed})")
    return LabeledDataset(features=features, c=c, clean_labels=labels)


# ============================================================================
# Corruption and empirical rates
# ============================================================================

def corrupt_labels(ds: LabeledDataset, Tc: ClassTransitionMatrix, seed: int) -> LabeledDataset:
    """Draw each noisy label from row ``clean_labels[i]`` of ``Tc``."""
    if ds.clean_labels is None:
        raise DatasetError("corrupt_labels needs clean labels")
    if Tc.c != ds.c:
        raise DimensionMismatchError("transition matrix class count", ds.c, Tc.c)
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(Tc.entries, axis=1)
    cumulative[:, -1] = 1.0
    u = rng.random(ds.n)
    noisy = np.argmax(u[:, None] < cumulative[ds.clean_labels], axis=1)
    return replace(ds, noisy_labels=noisy)


def _require_both(ds: LabeledDataset) -> Tuple[np.ndarray, np.ndarray]:
    if ds.clean_labels is None or ds.noisy_labels is None:
        raise DatasetError("both clean and noisy labels are required")
    return ds.clean_labels, ds.noisy_labels


def empirical_class_noise_rate(ds: LabeledDataset) -> float:
    clean, noisy = _require_both(ds)
    if clean.size == 0:
        return 0.0
    return float(np.mean(clean != noisy))


def sample_pairs(n: int, max_pairs: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform unordered pairs i < j; all pairs when there are at most ``max_pairs``."""
    total = n * (n - 1) // 2
    if total <= max_pairs:
        return np.triu_indices(n, k=1)
    first = rng.integers(0, n, size=max_pairs)
    second = rng.integers(0, n - 1, size=max_pairs)
    second = second + (second >= first)
    return np.minimum(first, second), np.maximum(first, second)


def empirical_simi_noise_rate(ds: LabeledDataset, max_pairs: int, seed: int) -> float:
    """Fraction of sampled pairs whose noisy similarity disagrees with the clean one."""
    clean, noisy = _require_both(ds)
    if ds.n < 2:
        raise DatasetError("need at least 2 points to form a pair")
    if max_pairs < 1:
        raise DatasetError("max_pairs must be positive")
    rng = np.random.default_rng(seed)
    i, j = sample_pairs(ds.n, max_pairs, rng)
    clean_sim = clean[i] == clean[j]
    noisy_sim = noisy[i] == noisy[j]
    return float(np.mean(clean_sim != noisy_sim))


def empirical_prior(labels: np.ndarray, c: int) -> ClassPrior:
    return ClassPrior.from_labels(labels, c)


def noise_report(
    ds: LabeledDataset,
    Tc: ClassTransitionMatrix,
    max_pairs: int = 1_000_000,
    seed: int = 0,
) -> Dict[str, Any]:
    """Analytic rates (under the empirical clean prior) next to measured ones."""
    clean, _ = _require_both(ds)
    prior = empirical_prior(clean, ds.c)
    Ts = class2simi(Tc, prior)
    similar_prior = pair_similar_prior(prior)
    return {
        "analytic_class_noise_rate": class_noise_rate(Tc, prior),
        "analytic_simi_noise_rate": simi_noise_rate(Ts, similar_prior),
        "empirical_class_noise_rate": empirical_class_noise_rate(ds),
        "empirical_simi_noise_rate": empirical_simi_noise_rate(ds, max_pairs, seed),
    }


def train_val_split(
    ds: LabeledDataset,
    validation_fraction: float,
    seed: int,
) -> Tuple[LabeledDataset, LabeledDataset]:
    if not (0.0 < validation_fraction < 1.0):
        raise DatasetError("validation fraction must lie in (0, 1)")
    n_val = max(1, int(round(validation_fraction * ds.n)))
    if n_val >= ds.n:
        raise DatasetError("validation split leaves no training data")
    train_idx, val_idx = train_test_split(np.arange(ds.n), test_size=n_val, random_state=seed, shuffle=True)
    return ds.subset(np.sort(train_idx)), ds.subset(np.sort(val_idx))


# ============================================================================
# CSV I/O
# ============================================================================

@dataclass(frozen=True)
class CsvSchema:
    label_column: int = -1
    has_header: bool = True
    noisy_label_column: Optional[int] = None


_LINE_RE = re.compile(r"line (\d+), saw (\d+)")
_EXPECTED_RE = re.compile(r"Expected (\d+) fields")


def _resolve_column(index: int, width: int) -> int:
    resolved = index if index >= 0 else width + index
    if not (0 <= resolved < width):
        raise CsvFormatError(f"column index {index} out of range for {width} columns")
    return resolved


def _parse_labels(raw: pd.Series, column: int, first_row: int) -> np.ndarray:
    values = pd.to_numeric(raw, errors="coerce")
    for pos, value in enumerate(values):
        row = first_row + pos
        if pd.isna(value):
            raise NonNumericCellError(row, column, raw.iloc[pos])
        if value != int(value):
            raise CsvFormatError(f"label {value} in column {column} is not an integer", row=row)
        if value < 0:
            raise NegativeLabelError(row, int(value))
    return values.to_numpy(dtype=np.int64)


def load_csv(path: Union[str, Path], schema: Optional[CsvSchema] = None) -> LabeledDataset:
    """Read numeric features and integer labels; rows are reported by file line number."""
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"CSV file not found: {path}")
    try:
        frame = pd.read_csv(
            path,
            header=0 if schema.has_header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            index_col=False,
        )
    except pd.errors.EmptyDataError:
        raise DatasetError(f"CSV file is empty: {path}")
    except pd.errors.ParserError as exc:
        found = _LINE_RE.search(str(exc))
        expected = _EXPECTED_RE.search(str(exc))
        if found and expected:
            raise RaggedRowError(int(found.group(1)), int(expected.group(1)), int(found.group(2)))
        raise CsvFormatError(str(exc))

    if frame.empty:
        raise DatasetError(f"CSV file has no data rows: {path}")
    first_row = 2 if schema.has_header else 1
    width = frame.shape[1]

    # short rows come back as NaN, empty cells as ""
    blank = frame.isna().to_numpy() | frame.fillna("").apply(lambda col: col.str.strip() == "").to_numpy()
    if blank.any():
        pos, col = np.argwhere(blank)[0]
        raise MissingCellError(first_row + int(pos), int(col))

    label_col = _resolve_column(schema.label_column, width)
    noisy_col = None
    if schema.noisy_label_column is not None:
        noisy_col = _resolve_column(schema.noisy_label_column, width)
        if noisy_col == label_col:
            raise CsvFormatError("noisy label column must differ from the label column")
    feature_cols = [col for col in range(width) if col not in (label_col, noisy_col)]
    if not feature_cols:
        raise CsvFormatError("CSV has no feature columns")

    features = np.empty((len(frame), len(feature_cols)))
    for out, col in enumerate(feature_cols):
        values = pd.to_numeric(frame.iloc[:, col], errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if bad.size:
            raise NonNumericCellError(first_row + int(bad[0]), col, frame.iloc[int(bad[0]), col])
        features[:, out] = frame.iloc[:, col].to_numpy(dtype=object).astype(np.float64)

    clean = _parse_labels(frame.iloc[:, label_col], label_col, first_row)
    noisy = None if noisy_col is None else _parse_labels(frame.iloc[:, noisy_col], noisy_col, first_row)
    c = int(max(clean.max(), noisy.max() if noisy is not None else 0)) + 1
    c = max(c, 2)
    logger.info(f"Loaded {len(frame)} rows x {len(feature_cols)} features from {path} (c={c})")
    return LabeledDataset(features=features, c=c, clean_labels=clean, noisy_labels=noisy)


def dataset_frame(ds: LabeledDataset) -> pd.DataFrame:
    """Features ``x0..x{d-1}``, then ``label`` and ``noisy_label`` when present."""
    frame = pd.DataFrame(ds.features, columns=[f"x{k}" for k in range(ds.d)])
    if ds.clean_labels is not None:
        frame["label"] = ds.clean_labels
    if ds.noisy_labels is not None:
        frame["noisy_label"] = ds.noisy_labels
    return frame


def csv_text(ds: LabeledDataset) -> str:
    return dataset_frame(ds).to_csv(index=False, float_format="%.17g", lineterminator="\n")


def write_csv(ds: LabeledDataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(csv_text(ds), encoding="utf-8")
    return path


def csv_schema_for(ds_path: Union[str, Path]) -> CsvSchema:
    """Schema matching a file produced by ``write_csv``."""
    header = Path(ds_path).read_text(encoding="utf-8").splitlines()[0].split(",")
    if "noisy_label" in header and "label" in header:
        return CsvSchema(label_column=header.index("label"), has_header=True, noisy_label_column=header.index("noisy_label"))
    if "label" in header:
        return CsvSchema(label_column=header.index("label"), has_header=True)
    numeric = pd.to_numeric(pd.Series(header), errors="coerce").notna().all()
    return CsvSchema(has_header=not numeric)
