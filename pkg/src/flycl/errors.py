"""Exception types shared across the package.

Contract violations on in-process APIs (bad dimensions, bad arguments)
raise plain ValueError. The classes below cover problems that originate
in user-supplied configuration or data, which the CLI maps to distinct
exit codes.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration value. CLI exit code 1."""


class DatasetError(Exception):
    """A dataset violates an invariant (empty class, class mismatch, ...). CLI exit code 2."""


class FeatureFileError(DatasetError):
    """A feature file failed to parse. Carries the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleError(DatasetError):
    """Prototype generation hit the attempt cap before satisfying the separation bound."""

    def __init__(self, message: str, best_cosine: float | None = None):
        self.best_cosine = best_cosine
        super().__init__(message)
