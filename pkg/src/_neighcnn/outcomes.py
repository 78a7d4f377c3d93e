"""This module contains code related to outcomes."""
from __future__ import annotations

from enum import auto
from enum import Enum
from enum import IntEnum

from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import NumericalError


__all__ = ["CommandOutcome", "ExitCode", "exit_code_from_exception"]


class CommandOutcome(Enum):
    """Outcomes of a command.

    Attributes
    ----------
    SUCCESS
        Outcome for a command which finished successfully.
    FAIL
        Outcome for a command which failed.

    """

    SUCCESS = auto()
    FAIL = auto()

    @property
    def description(self) -> str:
        """A description of an outcome used in the session footer."""
        descriptions = {
            CommandOutcome.SUCCESS: "Succeeded",
            CommandOutcome.FAIL: "Failed",
        }
        assert len(descriptions) == len(CommandOutcome)
        return descriptions[self]

    @property
    def style(self) -> str:
        """Return the style of an outcome."""
        styles = {
            CommandOutcome.SUCCESS: "success",
            CommandOutcome.FAIL: "failed",
        }
        assert len(styles) == len(CommandOutcome)
        return styles[self]


class ExitCode(IntEnum):
    """Exit codes for neighcnn."""

    OK = 0
    """The command finished successfully."""

    USAGE = 1
    """Invalid flags, configuration or arguments."""

    DATA_FAILED = 2
    """Data on disk was missing, unreadable or inconsistent."""

    NUMERIC_FAILED = 3
    """A computation produced non-finite values."""


def exit_code_from_exception(exc: BaseException) -> ExitCode:
    """Map an exception to the exit code of a command.

    Examples
    --------
    >>> exit_code_from_exception(NumericalError("nan"))
    <ExitCode.NUMERIC_FAILED: 3>
    >>> exit_code_from_exception(KeyError("x"))
    <ExitCode.USAGE: 1>

    """
    if isinstance(exc, NumericalError):
        return ExitCode.NUMERIC_FAILED
    if isinstance(exc, (DataError, OSError)):
        return ExitCode.DATA_FAILED
    return ExitCode.USAGE
