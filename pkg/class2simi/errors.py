"""Exception hierarchy for Class2Simi

This module provides:
- A base exception carrying a stable error code and a CLI exit code
- Validation errors (bad matrices, priors, datasets, configs) -> exit 1
- Runtime errors (numerical failures, estimation failures) -> exit 2
"""
from typing import Any, Dict, List, Optional


# ============================================================================
# Base
# ============================================================================

class Class2SimiException(Exception):
    """Base exception for the Class2Simi toolkit"""

    def __init__(
        self,
        message: str,
        code: str = "INTERNAL_ERROR",
        exit_code: int = 2,
        details: Optional[List[Dict[str, Any]]] = None,
    ):
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or []
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


# ============================================================================
# Validation errors (exit code 1)
# ============================================================================

class ValidationException(Class2SimiException):
    """Input failed validation"""

    def __init__(self, message: str, code: str = "VALIDATION_ERROR", details: Optional[list] = None):
        super().__init__(message=message, code=code, exit_code=1, details=details)


class MatrixValidationError(ValidationException):
    """Transition matrix is not row-stochastic or has the wrong shape"""

    def __init__(self, message: str, details: Optional[list] = None):
        super().__init__(message, code="INVALID_MATRIX", details=details)


class PriorError(ValidationException):
    """Class prior is negative, empty or degenerate"""

    def __init__(self, message: str):
        super().__init__(message, code="INVALID_PRIOR")


class DimensionMismatchError(ValidationException):
    """Two objects disagree on the class count or feature dimension"""

    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(
            f"{what}: expected {expected}, got {actual}",
            code="DIMENSION_MISMATCH",
            details=[{"expected": expected, "actual": actual}],
        )


class DatasetError(ValidationException):
    """Dataset is missing labels or is otherwise malformed"""

    def __init__(self, message: str):
        super().__init__(message, code="INVALID_DATASET")


class CsvFormatError(ValidationException):
    """CSV file could not be parsed"""

    def __init__(self, message: str, row: Optional[int] = None, code: str = "CSV_FORMAT_ERROR"):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message, code=code, details=[{"row": row}] if row is not None else None)


class MissingCellError(CsvFormatError):
    """A row has fewer cells than the header / first row"""

    def __init__(self, row: int, column: Optional[int] = None):
        where = f" in column {column}" if column is not None else ""
        super().__init__(f"missing cell{where}", row=row, code="CSV_MISSING_CELL")


class RaggedRowError(CsvFormatError):
    """A row has more cells than the header / first row"""

    def __init__(self, row: int, expected: int, actual: int):
        super().__init__(f"expected {expected} cells, found {actual}", row=row, code="CSV_RAGGED_ROW")


class NonNumericCellError(CsvFormatError):
    """A feature or label cell is not a number"""

    def __init__(self, row: int, column: int, value: str):
        super().__init__(f"non-numeric value {value!r} in column {column}", row=row, code="CSV_NON_NUMERIC")


class NegativeLabelError(CsvFormatError):
    """Labels must be non-negative integers"""

    def __init__(self, row: int, value: int):
        super().__init__(f"negative label {value}", row=row, code="CSV_NEGATIVE_LABEL")


class InvalidLabelError(ValidationException):
    """A class label is out of range or not an integer"""

    def __init__(self, message: str):
        super().__init__(message, code="INVALID_LABEL")


class ConfigError(ValidationException):
    """Experiment configuration is inconsistent"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}", code="INVALID_CONFIG", details=[{"field": field}])


class NotLearnableError(ValidationException):
    """Similarity transition matrix violates T_s,00 + T_s,11 > 1"""

    def __init__(self, diagonal_sum: float):
        super().__init__(
            f"similarity transition matrix is not learnable: T00 + T11 = {diagonal_sum:.6f} <= 1",
            code="NOT_LEARNABLE",
            details=[{"diagonal_sum": diagonal_sum}],
        )


class CheckpointError(ValidationException):
    """Checkpoint file is unreadable or incompatible"""

    def __init__(self, message: str):
        super().__init__(message, code="INVALID_CHECKPOINT")


# ============================================================================
# Runtime errors (exit code 2)
# ============================================================================

class NumericalError(Class2SimiException):
    """A non-finite value appeared in a forward/backward pass or update"""

    def __init__(self, message: str, layer: Optional[int] = None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message, code="NUMERICAL_ERROR", exit_code=2)


class PerturbationError(Class2SimiException):
    """Perturbation zeroed out a full row of the transition matrix"""

    def __init__(self, row: int):
        super().__init__(f"row {row} is all-zero after perturbation", code="PERTURBATION_ERROR", exit_code=2)


class EstimationError(Class2SimiException):
    """Anchor-point estimation failed"""

    def __init__(self, message: str, class_index: Optional[int] = None):
        self.class_index = class_index
        super().__init__(message, code="ESTIMATION_ERROR", exit_code=2)
