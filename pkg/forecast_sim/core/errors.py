"""
Exception hierarchy shared by the forecasting framework.
"""


class ForecastSimError(Exception):
    """Root of every error raised by forecast_sim."""


class DimensionError(ForecastSimError, ValueError):
    """Operand shapes do not agree."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        described = " vs ".join(str(s) for s in self.shapes)
        super().__init__(f"{op}: incompatible shapes {described}")


class ContractError(ForecastSimError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(ForecastSimError, ValueError):
    """Configuration is invalid or inconsistent."""


class IngestionError(ForecastSimError, ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(ForecastSimError, ArithmeticError):
    """Non-finite values appeared where finite ones are required."""
