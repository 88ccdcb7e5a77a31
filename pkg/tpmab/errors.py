"""
Exception hierarchy shared by every tpmab module.
"""

from __future__ import annotations

from typing import List, Optional, Sequence


class TpmabError(Exception):
    """Base class for all errors raised by tpmab."""


class InvalidParameterError(TpmabError, ValueError):
    """A constructor or operation received a parameter outside its domain."""


class InvalidArgumentError(TpmabError, ValueError):
    """An index argument (arm, round) is out of range."""


class InvalidRoundError(TpmabError, ValueError):
    """A round number is too small for the requested quantity."""


class ArmNotInitializedError(TpmabError):
    """Statistics were requested for an arm that has never been pulled."""


class ConsistencyError(TpmabError, RuntimeError):
    """Observations disagree with the policy's bookkeeping (a driver bug)."""


class DegenerateInstanceError(TpmabError, ValueError):
    """A bandit instance violates a precondition of a bound formula."""


class TraceLoadError(TpmabError):
    """A reward trace file could not be loaded."""


class ConfigError(TpmabError):
    """
    An experiment configuration is invalid.

    ``field`` is a dotted path such as ``policies[2].alpha_est``; ``line`` and
    ``column`` are set for syntax errors in the config file.
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.field = field
        self.line = line
        self.column = column
        location = []
        if line is not None:
            location.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        if field:
            location.append(f"field '{field}'")
        prefix = f"{'; '.join(location)}: " if location else ""
        super().__init__(prefix + message)


class ExperimentError(TpmabError):
    """One or more episodes of an experiment failed; the experiment was aborted."""

    def __init__(self, failures: Sequence[str]):
        self.failures: List[str] = list(failures)
        lines = "\n".join(f"  - {f}" for f in self.failures)
        super().__init__(f"{len(self.failures)} episode(s) failed:\n{lines}")


class ResultsSchemaError(TpmabError):
    """A results file lacks the columns a consumer needs."""

    def __init__(self, path: str, missing: Sequence[str]):
        self.path = path
        self.missing = list(missing)
        super().__init__(f"{path}: missing column(s) {', '.join(self.missing)}")


class NoDataError(TpmabError):
    """A results or bounds file has a header but no data rows."""
