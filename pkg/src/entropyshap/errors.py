"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`EntropyShapError`.  The ``exit_code`` attribute is what the CLI
returns when the error escapes a subcommand.
"""


class EntropyShapError(Exception):
    exit_code = 1


class ConfigError(EntropyShapError, ValueError):
    """Invalid or incompatible configuration (game/model/sampler mismatch...)."""

    exit_code = 2


class DataError(EntropyShapError, ValueError):
    exit_code = 3


class ParseError(DataError):
    """A CSV cell could not be parsed; message names the row and column."""


class SchemaError(DataError):
    pass


class SizeError(DataError):
    pass


class DomainError(EntropyShapError, ValueError):
    """An argument lies outside its mathematical domain."""

    exit_code = 2


class DivergenceError(DomainError):
    """p is not absolutely continuous with respect to q."""


class ConditioningError(DomainError):
    """Conditioning on an event of probability zero."""


class CapacityError(EntropyShapError):
    """Exact enumeration requested beyond the supported dimension."""

    exit_code = 4


class CalibrationSizeError(DataError):
    def __init__(self, n_cal, alpha, minimal):
        self.n_cal = n_cal
        self.alpha = alpha
        self.minimal = minimal
        super().__init__(
            f"n_cal={n_cal} is too small for alpha={alpha}; "
            f"need at least {minimal} calibration values"
        )


class MetricError(DataError):
    pass


class VerificationError(EntropyShapError):
    exit_code = 1
