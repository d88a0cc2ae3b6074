"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and I/O failures with 4.
"""

from __future__ import annotations


class TugDppError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(TugDppError):
    exit_code = 2


class InvalidExponent(ConfigError):
    """Exponent outside the admissible range (p <= 1, p > 64, alpha <= -1)."""


class UnsupportedDimension(ConfigError):
    pass


class ExponentOutOfRange(ConfigError):
    """Raised by checks that only make sense for 1 < p <= 2."""


class DegenerateDecomposition(TugDppError):
    pass


class DegenerateGradient(TugDppError):
    pass


class OutOfDomain(TugDppError):
    """A quadrature node or interpolation stencil left the covered lattice."""


class MismatchedProblems(TugDppError):
    pass


class NotConverged(TugDppError):
    """Value iteration hit max_iter; ``report`` carries the partial result."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SamplerStall(TugDppError):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownKey(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"unknown key {name!r}")
        self.name = name


class RangeError(ConfigError):
    def __init__(self, key: str, value, reason: str = "out of range"):
        super().__init__(f"{key} = {value!r}: {reason}")
        self.key = key
        self.value = value


class ReportError(TugDppError):
    """Refusal to serialize non-finite results."""

    exit_code = 3


class IoError(TugDppError):
    exit_code = 4
