"""Add a command to verify the gradients of all differentiable computations."""
from __future__ import annotations

import sys
from typing import Any
from typing import List

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.execute import main
from _neighcnn.gradcheck import GradCheckReport
from _neighcnn.gradcheck import GradientCheck
from _neighcnn.gradcheck import run_gradient_checks
from _neighcnn.outcomes import ExitCode
from _neighcnn.session import Session
from _neighcnn.shared import convert_truthy_or_falsy_to_bool
from _neighcnn.shared import get_first_non_none_value
from rich.text import Text


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(gradcheck)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["tolerance"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="tolerance",
        default=1e-4,
        callback=lambda x: x if x is None else float(x),
    )
    config["step"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="step",
        default=1e-5,
        callback=lambda x: x if x is None else float(x),
    )
    config["corrupt_gradient"] = get_first_non_none_value(
        config_from_cli,
        key="corrupt_gradient",
        default=False,
        callback=convert_truthy_or_falsy_to_bool,
    )


def format_report(report: GradCheckReport) -> Text:
    """Format a report as one line.

    Examples
    --------
    >>> format_report(GradCheckReport("relu", 1e-9, 1e-4, 6)).plain
    'PASSED  relu  max relative error 1.00e-09 (tolerance 1.00e-04, 6 elements)'

    """
    if report.passed:
        outcome = Text("PASSED", style="success")
    else:
        outcome = Text("FAILED", style="failed")
    return Text.assemble(
        outcome,
        f"  {report.name}  max relative error {report.max_relative_error:.2e} "
        f"(tolerance {report.tolerance:.2e}, {report.n_elements} elements)",
    )


def _gradcheck(session: Session) -> None:
    config = session.config
    checks: List[GradientCheck] = []
    session.hook.neighcnn_gradcheck_add_checks(session=session, checks=checks)

    reports = run_gradient_checks(
        checks,
        seed=config["seed"],
        step=config["step"],
        tolerance=config["tolerance"],
        corrupt=config["corrupt_gradient"],
    )
    for report in reports:
        console.print(format_report(report), highlight=False)

    session.results["reports"] = reports
    n_failed = sum(not report.passed for report in reports)
    if n_failed:
        console.print(f"{n_failed} of {len(reports)} gradient checks failed.")
        session.exit_code = ExitCode.NUMERIC_FAILED


@click.command(cls=ColoredCommand)
@click.option(
    "--tolerance",
    type=float,
    default=None,
    help="Largest accepted relative error. Deep compositions use a multiple. "
    "[dim]\\[default: 1e-4][/]",
)
@click.option(
    "--step",
    type=float,
    default=None,
    help="Relative step of the finite differences. [dim]\\[default: 1e-5][/]",
)
@click.option("--corrupt-gradient", is_flag=True, default=None, hidden=True)
def gradcheck(**config_from_cli: Any) -> None:
    """Compare analytic gradients with central finite differences.

    Every operation, loss and the network are checked on random inputs. The command
    fails if any check exceeds the tolerance.

    """
    config_from_cli["command"] = "gradcheck"
    session = main(config_from_cli, _gradcheck)
    sys.exit(session.exit_code)
