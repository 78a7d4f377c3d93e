"""Add a command to compare networks trained with different loss components."""
from __future__ import annotations

import sys
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.dataset import read_manifest
from _neighcnn.eval_command import write_report
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.execute import main
from _neighcnn.live import LiveTraining
from _neighcnn.session import Session
from _neighcnn.shared import falsy_to_none_callback
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import to_list
from _neighcnn.train_command import extractor_from
from _neighcnn.train_command import loss_config_from
from _neighcnn.train_command import model_config_from
from _neighcnn.train_command import train_config_from
from _neighcnn.trainer import DEFAULT_ABLATION_COMBOS
from _neighcnn.trainer import run_ablation


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(ablate)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["combo"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="combo",
        default=list(DEFAULT_ABLATION_COMBOS),
        callback=lambda x: x if x is None else to_list(x),
    )


def _ablate(session: Session) -> None:
    config = session.config
    if config["out_dir"] is None:
        raise ConfigurationError("The output directory is required, use --out-dir.")

    combos = [loss_config_from(config, enabled=combo) for combo in config["combo"]]
    model_config = model_config_from(config)
    train_config = train_config_from(config)
    extractor = extractor_from(config, combos[0])
    manifest = read_manifest(config["manifest"])

    with LiveTraining.from_session(session) as live:
        report = run_ablation(
            combos,
            manifest,
            model_config,
            train_config,
            extractor,
            looks=config["looks"],
            out_dir=config["out_dir"],
            on_train_start=live.on_train_start,
            **live.callbacks,
        )

    write_report(session, report, "ablation", "Ablation of the loss components")


@click.command(cls=ColoredCommand)
@click.option(
    "--combo",
    type=str,
    multiple=True,
    callback=falsy_to_none_callback,
    help="Loss components of one training, for example 'eu+n'. Pass the option once "
    "per training. [dim]\\[default: per, eu, per+n, eu+n, eu+per, eu+per+n][/]",
)
def ablate(**config_from_cli: Any) -> None:
    """Train one network per combination of loss components on MANIFEST.

    All networks start from the same initialization and are compared on the test split
    with the noisy images.

    """
    config_from_cli["command"] = "ablate"
    session = main(config_from_cli, _ablate)
    sys.exit(session.exit_code)
