"""Exception hierarchy. Each class carries a short category used by the CLI."""


class RiskGinError(Exception):
    category = "error"


class ShapeError(RiskGinError, ValueError):
    category = "shape"


class ConfigError(RiskGinError, ValueError):
    category = "config"


class DataError(RiskGinError, ValueError):
    category = "data"


class NumericError(RiskGinError, ArithmeticError):
    """Non-finite values appeared in a computation (overflow, divergence)."""

    category = "numeric"


class UndefinedMetricError(RiskGinError, ValueError):
    """Metric is undefined for the input, e.g. AUC with a single class."""

    category = "metric"


class IncompatibleError(RiskGinError):
    """Model file and library / dataset schema versions disagree."""

    category = "incompatible"


class StorageError(RiskGinError, OSError):
    category = "io"
