"""Implement hook specifications or entry-points for neighcnn.

At each of the entry-points, a plugin can register a hook implementation which receives
the message send by the host and may send a response.

"""
from __future__ import annotations

from typing import Any
from typing import TYPE_CHECKING

import click
import pluggy


if TYPE_CHECKING:
    from _neighcnn.gradcheck import GradientCheck
    from _neighcnn.outcomes import CommandOutcome
    from _neighcnn.session import Session


hookspec = pluggy.HookspecMarker("neighcnn")


@hookspec
def neighcnn_add_hooks(pm: pluggy.PluginManager) -> None:
    """Add hook specifications and implementations to the plugin manager.

    This hook is the first to be called to let plugins register their hook
    specifications and implementations.

    If you want to register plugins dynamically depending on the configuration, use
    :func:`neighcnn_post_parse` instead. See :mod:`_neighcnn.live` for an example.

    """


# Hooks for the command-line interface.


@hookspec
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface.

    The hook can be used to extend the command line interface either by providing new
    commands or adding options and arguments to existing commands.

    - Add commands via ``cli.add_command``.
    - Add options and arguments by extending ``cli.commands["<name>"].params`` if the
      parameters only apply to a certain command.

    """


# Hooks for the configuration.


@hookspec(firstresult=True)
def neighcnn_configure(
    pm: pluggy.PluginManager, config_from_cli: dict[str, Any]
) -> dict[str, Any]:
    """Configure neighcnn.

    The main hook implementation which controls the configuration and calls subordinated
    hooks.

    """


@hookspec
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse configuration from the CLI or from configuration files.

    Values from the command line take precedence over values from the configuration
    file which take precedence over the built-in defaults.

    """


@hookspec
def neighcnn_post_parse(config: dict[str, Any]) -> None:
    """Post parsing.

    This hook allows to consolidate the configuration in case some plugins might be
    mutually exclusive or to register plugins depending on the configuration.

    """


@hookspec
def neighcnn_unconfigure(session: Session) -> None:
    """Unconfigure a neighcnn session before the process is exited."""


# Hooks for logging.


@hookspec
def neighcnn_log_session_header(session: Session) -> None:
    """Log the header of a session."""


@hookspec
def neighcnn_log_session_footer(
    session: Session, duration: float, outcome: CommandOutcome
) -> None:
    """Log the footer of a session."""


# Hooks for the gradient-check suite.


@hookspec
def neighcnn_gradcheck_add_checks(
    session: Session, checks: list[GradientCheck]
) -> None:
    """Register finite-difference checks.

    Implementations append :class:`~_neighcnn.gradcheck.GradientCheck` objects to
    ``checks``. The ``gradcheck`` command evaluates every registered check.

    """
