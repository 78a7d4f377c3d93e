"""Configure neighcnn."""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any

import pluggy
import tomli
from _neighcnn.config_utils import get_config_reader
from _neighcnn.config_utils import parse_click_choice
from _neighcnn.config_utils import Precision
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.shared import convert_truthy_or_falsy_to_bool
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.shared import get_number_of_threads


hookimpl = pluggy.HookimplMarker("neighcnn")


@hookimpl
def neighcnn_configure(
    pm: pluggy.PluginManager, config_from_cli: dict[str, Any]
) -> dict[str, Any]:
    """Configure neighcnn."""
    config: dict[str, Any] = {"pm": pm}

    if config_from_cli.get("config"):
        config["config"] = Path(config_from_cli["config"])
        config_from_file = _read_config_file(config["config"])
    else:
        config["config"] = None
        config_from_file = {}

    try:
        pm.hook.neighcnn_parse_config(
            config=config,
            config_from_cli=config_from_cli,
            config_from_file=config_from_file,
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    pm.hook.neighcnn_post_parse(config=config)

    return config


def _read_config_file(path: Path) -> dict[str, Any]:
    """Read a configuration file and convert parsing errors."""
    read_config = get_config_reader(path)
    try:
        return read_config(path)
    except (configparser.Error, tomli.TOMLDecodeError) as e:
        raise ConfigurationError(f"Could not read {path}: {e}") from e


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration shared by all commands."""
    config["command"] = config_from_cli.get("command")

    config["seed"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="seed",
        default=0,
        callback=lambda x: x if x is None else int(x),
    )
    config["precision"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="precision",
        default=Precision.DOUBLE,
        callback=parse_click_choice("precision", Precision),
    )
    config["verbose"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="verbose",
        default=1,
        callback=lambda x: x if x is None else int(x),
    )
    config["show_locals"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="show_locals",
        default=False,
        callback=convert_truthy_or_falsy_to_bool,
    )
    config["n_threads"] = get_number_of_threads()
