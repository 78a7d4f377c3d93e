"""Add a command to search the coefficients of the loss."""
from __future__ import annotations

import sys
from functools import partial
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.dataset import read_manifest
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.execute import main
from _neighcnn.live import LiveTraining
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import parse_number_list
from _neighcnn.sweep_depth_command import write_sweep
from _neighcnn.train_command import extractor_from
from _neighcnn.train_command import loss_config_from
from _neighcnn.train_command import model_config_from
from _neighcnn.train_command import train_config_from
from _neighcnn.trainer import DEFAULT_ALPHAS
from _neighcnn.trainer import DEFAULT_BETAS
from _neighcnn.trainer import run_weight_sweep


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(sweep_weights)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration.

    If only one of both grids is given, the other one is empty.

    """
    alphas = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="alphas",
        callback=partial(parse_number_list, type_=float),
    )
    betas = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="betas",
        callback=partial(parse_number_list, type_=float),
    )
    if alphas is None and betas is None:
        alphas, betas = list(DEFAULT_ALPHAS), list(DEFAULT_BETAS)
    config["alphas"] = alphas or []
    config["betas"] = betas or []


def _sweep_weights(session: Session) -> None:
    config = session.config
    if config["out_dir"] is None:
        raise ConfigurationError("The output directory is required, use --out-dir.")

    model_config = model_config_from(config)
    loss_config = loss_config_from(config)
    train_config = train_config_from(config)
    extractor = extractor_from(config, loss_config)
    manifest = read_manifest(config["manifest"])

    with LiveTraining.from_session(session) as live:
        result = run_weight_sweep(
            config["alphas"],
            config["betas"],
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

    title = f"Test metrics per loss coefficient at L={result.look}"
    write_sweep(session, result, "weights", title)


@click.command(cls=ColoredCommand, name="sweep-weights")
@click.option(
    "--alphas",
    type=str,
    default=None,
    help="Comma-separated coefficients of the neighbourhood loss. "
    "[dim]\\[default: 0.005,0.001,0.0005,0.0001,0.00005][/]",
)
@click.option(
    "--betas",
    type=str,
    default=None,
    help="Comma-separated coefficients of the perceptual loss. "
    "[dim]\\[default: 0.002,0.001,0.0005][/]",
)
def sweep_weights(**config_from_cli: Any) -> None:
    """Train networks on MANIFEST while varying one loss coefficient at a time.

    The other coefficient keeps the value of --alpha-n or --beta-n.

    """
    config_from_cli["command"] = "sweep-weights"
    session = main(config_from_cli, _sweep_weights)
    sys.exit(session.exit_code)
