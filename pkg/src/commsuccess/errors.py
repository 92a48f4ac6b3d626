"""Exception hierarchy. Each class maps to one CLI exit code."""


class CommSuccessError(Exception):
    exit_code = 1


class ConfigurationError(CommSuccessError, ValueError):
    exit_code = 2


class DataError(CommSuccessError):
    exit_code = 3


class DegenerateStatisticsError(CommSuccessError, ValueError):
    """A statistic is undefined for the given input (e.g. a single class)."""

    exit_code = 4
