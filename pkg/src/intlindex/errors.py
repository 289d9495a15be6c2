"""Exception hierarchy. Each family maps onto one CLI exit code."""

from __future__ import annotations


class IntlIndexError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class DataError(IntlIndexError):
    """Input files are unreadable, malformed or inconsistent."""

    exit_code = 2


class FormatError(DataError):
    pass


class ConfigError(DataError):
    pass


class ComputationError(IntlIndexError):
    """A metric is undefined for the data it was asked about."""

    exit_code = 3


class UndefinedRIPError(ComputationError):
    pass


class UndefinedDCPError(ComputationError):
    pass


class DegenerateNormalizationError(ComputationError):
    pass


class DegenerateDesignError(ComputationError):
    pass


class UndefinedCorrelationError(ComputationError):
    pass
