"""Add a command to generate datasets of speckled images."""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.dataset import generate_dataset
from _neighcnn.dataset import MANIFEST_NAME
from _neighcnn.dataset import PRESETS
from _neighcnn.dataset import Split
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.execute import main
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from rich.table import Table


_COUNT_KEYS = ["train_pairs", "validation_pairs", "test_pairs", "image_size"]


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(gen_data)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["preset"] = get_first_non_none_value(
        config_from_cli, config_from_file, key="preset", default="paper"
    )
    if config["preset"] not in PRESETS:
        raise ValueError(f"'preset' can only be one of {list(PRESETS)}.")
    for key in _COUNT_KEYS:
        config[key] = get_first_non_none_value(
            config_from_cli,
            config_from_file,
            key=key,
            callback=lambda x: x if x is None else int(x),
        )
    config["clean_dir"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="clean_dir",
        callback=lambda x: x if x is None else Path(x),
    )


def _gen_data(session: Session) -> None:
    config = session.config
    if config["clean_dir"] is None or config["out_dir"] is None:
        raise ConfigurationError(
            "gen-data needs a directory of clean images and an output directory."
        )

    preset = PRESETS[config["preset"]]
    looks = preset.looks if config["looks"] is None else config["looks"]
    train_pairs = (
        preset.train_pairs if config["train_pairs"] is None else config["train_pairs"]
    )
    # Without a preset value, the validation pairs follow the training pairs.
    if config["validation_pairs"] is not None:
        validation_pairs = config["validation_pairs"]
    elif config["train_pairs"] is None:
        validation_pairs = preset.validation_pairs
    else:
        validation_pairs = None
    test_pairs = (
        preset.test_pairs if config["test_pairs"] is None else config["test_pairs"]
    )
    image_size = (
        preset.image_size if config["image_size"] is None else config["image_size"]
    )

    try:
        manifest = generate_dataset(
            config["clean_dir"],
            config["out_dir"],
            looks,
            train_pairs,
            validation_pairs,
            test_pairs,
            image_size,
            config["seed"],
            config["n_threads"],
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    session.results["manifest"] = manifest
    if config["verbose"] >= 1:
        console.print(_counts_table(manifest.counts(), manifest.looks))
        path = config["out_dir"] / MANIFEST_NAME
        console.print(f"The manifest was written to {path}.")


def _counts_table(counts: dict[tuple[int, Split], int], looks: list[int]) -> Table:
    table = Table(title="Pairs per look")
    table.add_column("L", justify="right")
    for split in Split:
        table.add_column(split.value.capitalize(), justify="right")
    for look in looks:
        table.add_row(str(look), *(str(counts.get((look, s), 0)) for s in Split))
    return table


@click.command(cls=ColoredCommand, name="gen-data")
@click.argument("clean_dir", type=click.Path(file_okay=False, resolve_path=True))
@click.argument("out_dir", type=click.Path(file_okay=False, resolve_path=True))
@click.option(
    "--preset",
    type=click.Choice(list(PRESETS)),
    default=None,
    help="Looks, pair counts and image size to start from. [dim]\\[default: paper][/]",
)
@click.option("--train-pairs", type=int, default=None, help="Training pairs per look.")
@click.option(
    "--validation-pairs",
    type=int,
    default=None,
    help="Validation pairs per look. [dim]\\[default: a tenth of the training "
    "pairs][/]",
)
@click.option("--test-pairs", type=int, default=None, help="Test pairs per look.")
@click.option(
    "--image-size",
    type=int,
    default=None,
    help="Clean images are center-cropped to squares of this size.",
)
def gen_data(**config_from_cli: Any) -> None:
    """Generate pairs of clean and speckled images.

    Clean 8-bit PNG or PGM images are taken from CLEAN_DIR. The speckled images, the
    cropped clean images, previews and the manifest are written to OUT_DIR.

    """
    config_from_cli["command"] = "gen-data"
    session = main(config_from_cli, _gen_data)
    sys.exit(session.exit_code)
