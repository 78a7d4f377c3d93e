from __future__ import annotations

from contextlib import ExitStack as does_not_raise  # noqa: N813

import pytest
from _neighcnn.config_utils import Precision
from _neighcnn.logging import _humanize_time
from _neighcnn.logging import neighcnn_log_session_footer
from _neighcnn.logging import neighcnn_log_session_header
from _neighcnn.outcomes import CommandOutcome
from _neighcnn.session import Session
from neighcnn import cli


@pytest.mark.unit
def test_neighcnn_log_session_header(capsys, tmp_path):
    session = Session(
        {
            "command": "train",
            "config": tmp_path / "neighcnn.toml",
            "seed": 3,
            "precision": Precision.SINGLE,
            "n_threads": 2,
        }
    )

    neighcnn_log_session_header(session)

    captured = capsys.readouterr().out
    assert "Start neighcnn train" in captured
    assert "Configuration:" in captured
    assert "Seed: 3 -- Precision: 32-bit -- Threads: 2" in captured


@pytest.mark.unit
@pytest.mark.parametrize(
    "duration, outcome, expected",
    [
        (
            1,
            CommandOutcome.FAIL,
            "────── Failed in 1 second ───────────",
        ),
        (
            10,
            CommandOutcome.SUCCESS,
            "────── Succeeded in 10 seconds ─────",
        ),
        (
            5401,
            CommandOutcome.SUCCESS,
            "─ Succeeded in 1 hour, 30 minutes ─",
        ),
        (
            125_000,
            CommandOutcome.FAIL,
            "─────── Failed in 1 day, 10 hours, 43 minutes ───────────",
        ),
    ],
)
def test_neighcnn_log_session_footer(capsys, duration, outcome, expected):
    neighcnn_log_session_footer(Session({"verbose": 1}), duration, outcome)
    captured = capsys.readouterr()
    assert expected in captured.out


@pytest.mark.unit
@pytest.mark.parametrize(
    "outcome, is_shown",
    [(CommandOutcome.SUCCESS, False), (CommandOutcome.FAIL, True)],
)
def test_quiet_footer_only_reports_failures(capsys, outcome, is_shown):
    neighcnn_log_session_footer(Session({"verbose": 0}), 1, outcome)
    assert (outcome.description in capsys.readouterr().out) is is_shown


@pytest.mark.unit
@pytest.mark.parametrize(
    "amount, unit, short_label, expectation, expected",
    [
        (2.234, "seconds", True, does_not_raise(), [(2.23, "s")]),
        (173, "hours", True, does_not_raise(), [(7, "d"), (5, "h")]),
        (1, "hour", False, does_not_raise(), [(1, "hour")]),
        (
            17281,
            "seconds",
            False,
            does_not_raise(),
            [(4, "hours"), (48, "minutes"), (1, "second")],
        ),
        (1, "hour", True, does_not_raise(), [(1, "h")]),
        (
            1,
            "unknown_unit",
            False,
            pytest.raises(ValueError, match="The time unit"),
            None,
        ),
        (0.999, "seconds", False, does_not_raise(), [(1, "second")]),
        (1.254, "seconds", False, does_not_raise(), [(1.25, "seconds")]),
    ],
)
def test_humanize_time(amount, unit, short_label, expectation, expected):
    with expectation:
        result = _humanize_time(amount, unit, short_label)
        assert result == expected


@pytest.mark.end_to_end
@pytest.mark.parametrize("verbose", ["0", "1"])
def test_verbosity_controls_header(runner, verbose):
    result = runner.invoke(cli, ["gradcheck", "--corrupt-gradient", "-v", verbose])

    assert ("Start neighcnn gradcheck" in result.output) is (verbose == "1")
    assert "Failed in" in result.output
