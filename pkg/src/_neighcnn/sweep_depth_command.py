"""Add a command to train networks of increasing depth."""
from __future__ import annotations

import sys
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.dataset import read_manifest
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.execute import main
from _neighcnn.live import LiveTraining
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import parse_number_list
from _neighcnn.train_command import extractor_from
from _neighcnn.train_command import loss_config_from
from _neighcnn.train_command import model_config_from
from _neighcnn.train_command import train_config_from
from _neighcnn.trainer import DEFAULT_DEPTHS
from _neighcnn.trainer import run_depth_sweep
from _neighcnn.trainer import SweepResult


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(sweep_depth)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["depths"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="depths",
        default=list(DEFAULT_DEPTHS),
        callback=parse_number_list,
    )


def write_sweep(session: Session, result: SweepResult, name: str, title: str) -> None:
    """Write the result of a sweep to the output directory and show it."""
    csv_path, text_path = result.write(session.config["out_dir"], name)
    session.results["sweep"] = result
    session.results["sweep_paths"] = (csv_path, text_path)
    if session.config["verbose"] >= 1:
        console.print(result.to_table(title))
        console.print(f"The sweep was written to {csv_path} and {text_path}.")


def _sweep_depth(session: Session) -> None:
    config = session.config
    if config["out_dir"] is None:
        raise ConfigurationError("The output directory is required, use --out-dir.")

    model_config = model_config_from(config)
    loss_config = loss_config_from(config)
    train_config = train_config_from(config)
    extractor = extractor_from(config, loss_config)
    manifest = read_manifest(config["manifest"])

    with LiveTraining.from_session(session) as live:
        result = run_depth_sweep(
            config["depths"],
            manifest,
            model_config,
            loss_config,
            train_config,
            extractor,
            look=config["look"],
            out_dir=config["out_dir"],
            on_train_start=live.on_train_start,
            **live.callbacks,
        )

    write_sweep(session, result, "depth", f"Test metrics per depth at L={result.look}")


@click.command(cls=ColoredCommand, name="sweep-depth")
@click.option(
    "--depths",
    type=str,
    default=None,
    help="Comma-separated depths or a range like 7:16. [dim]\\[default: 7:16][/]",
)
def sweep_depth(**config_from_cli: Any) -> None:
    """Train one network per depth on MANIFEST and evaluate it at a single look."""
    config_from_cli["command"] = "sweep-depth"
    session = main(config_from_cli, _sweep_depth)
    sys.exit(session.exit_code)
