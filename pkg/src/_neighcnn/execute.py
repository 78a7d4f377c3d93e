"""Run a command inside a session."""
from __future__ import annotations

import sys
import time
from typing import Any
from typing import Callable

from _neighcnn.console import console
from _neighcnn.outcomes import CommandOutcome
from _neighcnn.outcomes import exit_code_from_exception
from _neighcnn.outcomes import ExitCode
from _neighcnn.pluginmanager import get_plugin_manager
from _neighcnn.session import Session
from _neighcnn.traceback import remove_internal_traceback_frames_from_exc_info
from _neighcnn.traceback import render_exc_info


def main(
    config_from_cli: dict[str, Any], run: Callable[[Session], None]
) -> Session:
    """Configure a session and run a command in it.

    This is the mechanism shared by all commands which usually receive kwargs from the
    command line interface. It can also be used to run commands interactively. Pass
    configuration in a dictionary.

    Parameters
    ----------
    config_from_cli : dict[str, Any]
        A dictionary with options passed to neighcnn. In general, this dictionary holds
        the information passed via the command line interface.
    run : Callable[[Session], None]
        The body of the command. It stores its results in ``session.results``.

    Returns
    -------
    session : _neighcnn.session.Session
        The session captures all the information of the current run.

    """
    # Tracebacks start in the body of the command.
    __tracebackhide__ = True

    try:
        pm = get_plugin_manager()
        from _neighcnn import cli

        pm.register(cli)
        pm.hook.neighcnn_add_hooks(pm=pm)

        config = pm.hook.neighcnn_configure(pm=pm, config_from_cli=config_from_cli)

        session = Session.from_config(config)

    except Exception as e:
        _report_exception(e, show_locals=False)
        session = Session({}, None)
        session.exit_code = exit_code_from_exception(e)
        return session

    session.start = time.time()
    session.hook.neighcnn_log_session_header(session=session)
    try:
        run(session)
    except Exception as e:
        _report_exception(e, show_locals=session.config["show_locals"])
        session.exit_code = exit_code_from_exception(e)
    session.end = time.time()

    outcome = (
        CommandOutcome.SUCCESS
        if session.exit_code == ExitCode.OK
        else CommandOutcome.FAIL
    )
    session.hook.neighcnn_log_session_footer(
        session=session, duration=session.end - session.start, outcome=outcome
    )
    session.hook.neighcnn_unconfigure(session=session)

    return session


def _report_exception(exc: BaseException, show_locals: bool) -> None:
    """Print the traceback to the console and the message to standard error."""
    exc_info = remove_internal_traceback_frames_from_exc_info(sys.exc_info())
    console.print(render_exc_info(*exc_info, show_locals=show_locals))
    print(f"{type(exc).__name__}: {exc}", file=sys.stderr)  # noqa: T201
