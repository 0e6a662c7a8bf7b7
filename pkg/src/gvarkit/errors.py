"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`GvarkitError`. The
three families map onto the CLI exit codes: configuration problems (2),
data problems (3) and numerical or analysis failures (4).
"""

from __future__ import annotations


class GvarkitError(Exception):
    exit_code = 1


class ConfigError(GvarkitError, ValueError):
    exit_code = 2


class DataError(GvarkitError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CoverageError(DataError):
    def __init__(self, missing: list[tuple[str, str, str]], message: str | None = None):
        self.missing = list(missing)
        if message is None:
            shown = ", ".join(f"({c},{v},{d})" for c, v, d in self.missing[:20])
            more = "" if len(self.missing) <= 20 else f" ... and {len(self.missing) - 20} more"
            message = f"ragged panel, missing (country,variable,date): {shown}{more}"
        super().__init__(message)


class DomainError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class NormalizationError(DataError):
    pass


class NumericalError(GvarkitError, ArithmeticError):
    exit_code = 4


class CollinearityError(NumericalError):
    def __init__(self, message: str, columns: list[str] | None = None):
        self.columns = list(columns or [])
        super().__init__(message)


class SolvabilityError(NumericalError):
    pass


class SamplerError(NumericalError):
    def __init__(self, message: str, draw_index: int | None = None):
        self.draw_index = draw_index
        if draw_index is not None:
            message = f"draw {draw_index}: {message}"
        super().__init__(message)


class AnalysisError(GvarkitError):
    exit_code = 4


class StageError(GvarkitError):
    """A pipeline stage failed; ``cause`` holds the upstream error."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"stage '{stage}' failed: {cause}")
