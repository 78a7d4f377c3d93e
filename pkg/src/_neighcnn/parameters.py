"""Contains common parameters for the commands of the command line interface."""
from __future__ import annotations

from pathlib import Path
from typing import Any

import click
from _neighcnn.config import hookimpl
from _neighcnn.shared import falsy_to_none_callback
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import parse_number_list


COMMANDS = [
    "ablate",
    "despeckle",
    "eval",
    "gen-data",
    "gradcheck",
    "sweep-depth",
    "sweep-weights",
    "train",
]
"""List[str]: All commands of neighcnn."""

TRAINING_COMMANDS = ["ablate", "sweep-depth", "sweep-weights", "train"]
"""List[str]: Commands which train networks and share the model and train options."""


_CONFIG_OPTION = click.Option(
    ["-c", "--config"],
    type=click.Path(exists=True, dir_okay=False, resolve_path=True),
    help="Path to a configuration file in TOML or flat key-value format.",
)
"""click.Option: An option for the --config flag."""

_SEED_OPTION = click.Option(
    ["--seed"],
    type=click.IntRange(min=0),
    default=None,
    help="Seed of every random decision. [dim]\\[default: 0][/]",
)

_PRECISION_OPTION = click.Option(
    ["--precision"],
    type=click.Choice(["64", "32"]),
    default=None,
    help="Floating point precision of data and parameters. [dim]\\[default: 64][/]",
)

_VERBOSE_OPTION = click.Option(
    ["-v", "--verbose"],
    type=click.IntRange(0, 2),
    default=None,
    help="Make neighcnn verbose (>= 0) or quiet (= 0). Level 2 prints the loss of "
    "every batch. [dim]\\[default: 1][/]",
)
"""click.Option: An option to control neighcnn's verbosity."""

_SHOW_LOCALS_OPTION = click.Option(
    ["--show-locals"],
    is_flag=True,
    default=None,
    help="Show local variables in tracebacks.",
)

_OUT_DIR_OPTION = click.Option(
    ["--out-dir"],
    type=click.Path(file_okay=False, resolve_path=True),
    default=None,
    help="Directory which receives all outputs of the command.",
)

_LOOKS_OPTION = click.Option(
    ["--looks"],
    type=str,
    default=None,
    help="Comma-separated numbers of looks. Ranges like 2:8 include both ends.",
)
"""click.Option: Selects looks. The meaning depends on the command."""

_LOOK_OPTION = click.Option(
    ["--look"],
    type=click.IntRange(min=1),
    default=None,
    help="The number of looks at which a sweep is evaluated. [dim]\\[default: 4][/]",
)

_MANIFEST_ARGUMENT = click.Argument(
    ["manifest"],
    type=click.Path(exists=True, dir_okay=False, resolve_path=True),
)
"""click.Argument: The manifest of a dataset."""


_MODEL_OPTIONS = [
    click.Option(
        ["--depth"],
        type=int,
        default=None,
        help="Number of convolutional layers. [dim]\\[default: 12][/]",
    ),
    click.Option(
        ["--filters"],
        type=int,
        default=None,
        help="Number of filters of the hidden layers. [dim]\\[default: 64][/]",
    ),
    click.Option(
        ["--kernel-size"],
        type=int,
        default=None,
        help="Odd size of all convolution kernels. [dim]\\[default: 3][/]",
    ),
]
"""List[click.Option]: Options for the architecture."""

_LOSS_COEFFICIENT_OPTIONS = [
    click.Option(
        ["--alpha-n"],
        type=float,
        default=None,
        help="Coefficient of the neighbourhood loss. [dim]\\[default: 0.0001][/]",
    ),
    click.Option(
        ["--beta-n"],
        type=float,
        default=None,
        help="Coefficient of the perceptual loss. [dim]\\[default: 0.001][/]",
    ),
    click.Option(
        ["--n-blocks"],
        type=int,
        default=None,
        help="Number of feature blocks of the perceptual loss. [dim]\\[default: 3][/]",
    ),
    click.Option(
        ["--extractor"],
        type=str,
        default=None,
        help="Either 'tiny-random' or the path to a feature extractor checkpoint. "
        "[dim]\\[default: tiny-random][/]",
    ),
]
"""List[click.Option]: Options for the coefficients and the extractor of the loss."""

_LOSS_OPTION = click.Option(
    ["--loss"],
    type=str,
    multiple=True,
    callback=falsy_to_none_callback,
    help="Enabled loss components joined by '+' or passed repeatedly, for example "
    "'eu+n'. [dim]\\[default: euclidean+perceptual+neighbourhood][/]",
)

_TRAIN_OPTIONS = [
    click.Option(
        ["--learning-rate"],
        type=float,
        default=None,
        help="Step size of Adam. [dim]\\[default: 0.0001][/]",
    ),
    click.Option(
        ["--batch-size"],
        type=int,
        default=None,
        help="Number of patches per batch. [dim]\\[default: 16][/]",
    ),
    click.Option(
        ["--max-epochs"],
        type=int,
        default=None,
        help="Upper limit of training epochs. [dim]\\[default: 100][/]",
    ),
    click.Option(
        ["--patience"],
        type=int,
        default=None,
        help="Stop after so many epochs without improvement. [dim]\\[default: 10][/]",
    ),
    click.Option(
        ["--min-delta"],
        type=float,
        default=None,
        help="Relative improvement of the validation loss which counts. "
        "[dim]\\[default: 1e-05][/]",
    ),
    click.Option(
        ["--patch-size"],
        type=int,
        default=None,
        help="Cut images into square patches of this size. [dim]\\[default: whole "
        "images][/]",
    ),
    click.Option(
        ["--patch-stride"],
        type=int,
        default=None,
        help="Stride between patches. [dim]\\[default: the patch size][/]",
    ),
    click.Option(
        ["--patches-per-image"],
        type=int,
        default=None,
        help="Draw a random subset of patches from every image. [dim]\\[default: "
        "all][/]",
    ),
]
"""List[click.Option]: Options for the optimizer, stopping rule and patches."""


@hookimpl(trylast=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Register the parameters shared by several commands."""
    for command in COMMANDS:
        cli.commands[command].params.extend(
            [
                _CONFIG_OPTION,
                _SEED_OPTION,
                _PRECISION_OPTION,
                _VERBOSE_OPTION,
                _SHOW_LOCALS_OPTION,
            ]
        )
    for command in [*TRAINING_COMMANDS, "eval", "gen-data"]:
        cli.commands[command].params.append(_LOOKS_OPTION)
    for command in ["ablate", "despeckle", "eval", "sweep-depth", "sweep-weights"]:
        cli.commands[command].params.append(_OUT_DIR_OPTION)
    for command in ["sweep-depth", "sweep-weights"]:
        cli.commands[command].params.append(_LOOK_OPTION)
    for command in [*TRAINING_COMMANDS, "eval"]:
        cli.commands[command].params.append(_MANIFEST_ARGUMENT)
    for command in TRAINING_COMMANDS:
        cli.commands[command].params.extend(
            [*_MODEL_OPTIONS, *_LOSS_COEFFICIENT_OPTIONS, *_TRAIN_OPTIONS]
        )
    for command in ["sweep-depth", "sweep-weights", "train"]:
        cli.commands[command].params.append(_LOSS_OPTION)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the keys which are shared by several commands."""
    config["looks"] = get_first_non_none_value(
        config_from_cli, config_from_file, key="looks", callback=parse_number_list
    )
    config["look"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="look",
        default=4,
        callback=lambda x: x if x is None else int(x),
    )
    config["out_dir"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="out_dir",
        callback=lambda x: x if x is None else Path(x),
    )
    config["manifest"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="manifest",
        callback=lambda x: x if x is None else Path(x),
    )
