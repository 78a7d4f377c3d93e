"""Add a command to evaluate a trained network on a manifest."""
from __future__ import annotations

import sys
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.config_utils import parse_click_choice
from _neighcnn.console import console
from _neighcnn.dataset import read_manifest
from _neighcnn.dataset import Split
from _neighcnn.despeckle_command import load_model
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.execute import main
from _neighcnn.metrics import evaluate_set
from _neighcnn.metrics import MetricReport
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.trainer import model_despeckler


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(eval_)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["split"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="split",
        default=Split.TEST,
        callback=parse_click_choice("split", Split),
    )
    config["label"] = get_first_non_none_value(
        config_from_cli, config_from_file, key="label", default="NeighCNN"
    )
    config["decimals"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="decimals",
        default=4,
        callback=lambda x: x if x is None else int(x),
    )


def write_report(session: Session, report: MetricReport, name: str, title: str) -> None:
    """Write a report to the output directory and show it."""
    csv_path, text_path = report.write(session.config["out_dir"], name)
    session.results["report"] = report
    session.results["report_paths"] = (csv_path, text_path)
    if session.config["verbose"] >= 1:
        console.print(report.to_table(title))
        console.print(f"The report was written to {csv_path} and {text_path}.")


def _eval(session: Session) -> None:
    config = session.config
    if config["out_dir"] is None:
        raise ConfigurationError("The output directory is required, use --out-dir.")
    if config["decimals"] < 0:
        raise ConfigurationError(
            f"The number of decimals must be non-negative, got {config['decimals']}."
        )

    manifest = read_manifest(config["manifest"])
    model = load_model(session)
    try:
        report = evaluate_set(
            manifest,
            {config["label"]: model_despeckler(model)},
            looks=config["looks"],
            split=config["split"],
            n_threads=config["n_threads"],
            decimals=config["decimals"],
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    title = f"Evaluation on the {config['split'].value} split"
    write_report(session, report, "report", title)


@click.command(cls=ColoredCommand, name="eval")
@click.argument(
    "checkpoint", type=click.Path(exists=True, dir_okay=False, resolve_path=True)
)
@click.option(
    "--split",
    type=click.Choice([split.value for split in Split]),
    default=None,
    help="The split which is evaluated. [dim]\\[default: test][/]",
)
@click.option(
    "--label",
    type=str,
    default=None,
    help="The name of the method in the report. [dim]\\[default: NeighCNN][/]",
)
@click.option(
    "--decimals",
    type=int,
    default=None,
    help="Decimals of the numbers in the report. [dim]\\[default: 4][/]",
)
def eval_(**config_from_cli: Any) -> None:
    """Compare the network in CHECKPOINT with the noisy images of MANIFEST.

    PSNR, SSIM and UQI are averaged per look and written as CSV and as a text table.

    """
    config_from_cli["command"] = "eval"
    session = main(config_from_cli, _eval)
    sys.exit(session.exit_code)
