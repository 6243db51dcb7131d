"""Exception hierarchy shared across the toolkit."""


class PrognosisError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(PrognosisError):
    """Input file does not match the declared column schema."""


class IngestionError(PrognosisError):
    """Rows parsed but violate cohort-level rules (duplicates, missing outcome)."""


class ParameterError(PrognosisError):
    """Degenerate or out-of-range configuration value."""


class CompletenessError(PrognosisError):
    """A required biomarker is absent from a record."""


class ShapeError(PrognosisError):
    """Vector/matrix arity does not match the expected feature set."""


class DataError(PrognosisError):
    """Labels or feature values violate model preconditions."""


class DegenerateDataError(DataError):
    """Dataset has a single outcome class; the model is not identifiable."""


class InferenceError(PrognosisError):
    """Wald inference failed (e.g. singular information matrix)."""


class MetricError(PrognosisError):
    """Metric undefined for the given inputs (empty or single-class)."""
