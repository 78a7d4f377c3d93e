from __future__ import annotations

import sys

import pytest
from _neighcnn.traceback import remove_internal_traceback_frames_from_exc_info
from neighcnn import ExitCode
from neighcnn import main


def _raise(exception):
    raise exception


@pytest.mark.end_to_end
@pytest.mark.parametrize(
    "value, exception, is_hidden",
    [
        (True, Exception, True),
        (False, Exception, False),
        (lambda exc_info: True, Exception, True),
        (lambda exc_info: False, Exception, False),
        (lambda exc_info: isinstance(exc_info[1], ValueError), ValueError, True),
        (lambda exc_info: isinstance(exc_info[1], ValueError), TypeError, False),
    ],
)
def test_hide_traceback_from_error_report(capsys, value, exception, is_hidden):
    def run(session):  # noqa: U100
        a = "This variable should not be shown."  # noqa: F841
        __tracebackhide__ = value

        _raise(exception)

    session = main({"command": "train", "show_locals": True}, run)

    assert session.exit_code == ExitCode.USAGE
    captured = capsys.readouterr()
    assert ("This variable should not be shown." in captured.out) is not is_hidden
    assert exception.__name__ in captured.err


@pytest.mark.unit
def test_frames_of_the_caller_are_kept():
    try:
        raise ValueError("bad")
    except ValueError:
        exc_info = sys.exc_info()

    filtered = remove_internal_traceback_frames_from_exc_info(exc_info)

    assert filtered[2] is exc_info[2]
