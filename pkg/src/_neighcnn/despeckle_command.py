"""Add a command to despeckle images with a trained network."""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

import click
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import DataError
from _neighcnn.execute import main
from _neighcnn.network import despeckle_image
from _neighcnn.network import Model
from _neighcnn.network import model_from_checkpoint
from _neighcnn.raster import RASTER_SUFFIX
from _neighcnn.raster import read_image
from _neighcnn.raster import write_image
from _neighcnn.raster import write_raster
from _neighcnn.session import Session
from _neighcnn.shared import find_duplicates
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import to_list


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(despeckle)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["checkpoint"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="checkpoint",
        callback=lambda x: x if x is None else Path(x),
    )
    inputs = config_from_cli.get("inputs") or []
    config["inputs"] = [Path(path) for path in to_list(inputs)]


def load_model(session: Session) -> Model:
    """Load the network of the ``checkpoint`` key in the precision of the session."""
    if session.config["checkpoint"] is None:
        raise ConfigurationError("A checkpoint is required.")
    model = model_from_checkpoint(load_checkpoint(session.config["checkpoint"]))
    return model.astype(session.config["precision"].dtype)


def _despeckle(session: Session) -> None:
    config = session.config
    if config["out_dir"] is None:
        raise ConfigurationError("The output directory is required, use --out-dir.")
    duplicated_stems = find_duplicates(path.stem for path in config["inputs"])
    if duplicated_stems:
        raise DataError(
            f"Inputs must have unique names, found {sorted(duplicated_stems)}."
        )

    model = load_model(session)
    images = {path: read_image(path) for path in config["inputs"]}

    out_dir = config["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}
    for path, image in images.items():
        despeckled, clamped = despeckle_image(model, image)
        raster_path = out_dir / f"{path.stem}{RASTER_SUFFIX}"
        preview_path = out_dir / f"{path.stem}.png"
        write_raster(raster_path, despeckled)
        write_image(preview_path, clamped)
        outputs[path] = raster_path
        if config["verbose"] >= 1:
            console.print(f"{path.name} -> {raster_path.name}, {preview_path.name}")

    session.results["outputs"] = outputs


@click.command(cls=ColoredCommand)
@click.argument(
    "checkpoint", type=click.Path(exists=True, dir_okay=False, resolve_path=True)
)
@click.argument(
    "inputs",
    nargs=-1,
    required=True,
    type=click.Path(exists=True, dir_okay=False, resolve_path=True),
)
def despeckle(**config_from_cli: Any) -> None:
    """Despeckle images with the network stored in CHECKPOINT.

    Inputs can be 8-bit PNG or PGM images or float rasters. For every input, the
    despeckled image is written as a float raster together with an 8-bit preview.

    """
    config_from_cli["command"] = "despeckle"
    session = main(config_from_cli, _despeckle)
    sys.exit(session.exit_code)
