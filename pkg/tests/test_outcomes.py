from __future__ import annotations

import pytest
from _neighcnn.exceptions import AutogradError
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import NumericalError
from _neighcnn.exceptions import ShapeError
from _neighcnn.outcomes import CommandOutcome
from _neighcnn.outcomes import exit_code_from_exception
from _neighcnn.outcomes import ExitCode


@pytest.mark.unit
@pytest.mark.parametrize(
    "exception, expected",
    [
        (NumericalError("nan"), ExitCode.NUMERIC_FAILED),
        (DataError("missing"), ExitCode.DATA_FAILED),
        (CheckpointError("truncated"), ExitCode.DATA_FAILED),
        (FileNotFoundError("x.png"), ExitCode.DATA_FAILED),
        (ConfigurationError("bad"), ExitCode.USAGE),
        (ShapeError("bad"), ExitCode.USAGE),
        (AutogradError("bad"), ExitCode.USAGE),
        (ValueError("bad"), ExitCode.USAGE),
    ],
)
def test_exit_code_from_exception(exception, expected):
    assert exit_code_from_exception(exception) == expected


@pytest.mark.unit
@pytest.mark.parametrize("outcome", CommandOutcome)
def test_every_outcome_has_description_and_style(outcome):
    assert outcome.description
    assert outcome.style in ["success", "failed"]


@pytest.mark.unit
def test_exit_codes_are_stable():
    assert [int(code) for code in ExitCode] == [0, 1, 2, 3]
