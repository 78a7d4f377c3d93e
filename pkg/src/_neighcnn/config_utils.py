"""This module contains helper functions for the configuration."""
from __future__ import annotations

import configparser
import fnmatch
from enum import Enum
from pathlib import Path
from typing import Any
from typing import Callable

import tomli


_FLAT_SECTION = "neighcnn"


def parse_click_choice(
    name: str, enum_: type[Enum]
) -> Callable[[Enum | str | None], Enum | None]:
    """Validate the passed options for a :class:`click.Choice` option."""
    value_to_name = {enum_[name].value: name for name in enum_.__members__}

    def _parse(x: Enum | str | None) -> Enum | None:
        if x in [None, "None", "none"]:
            out = None
        elif isinstance(x, enum_):
            out = x
        elif isinstance(x, (str, int)) and str(x) in value_to_name:
            out = enum_[value_to_name[str(x)]]
        else:
            raise ValueError(f"'{name}' can only be one of {list(value_to_name)}.")
        return out

    return _parse


class Precision(Enum):
    DOUBLE = "64"
    SINGLE = "32"

    @property
    def dtype(self) -> str:
        return "float64" if self is Precision.DOUBLE else "float32"


def _read_flat_config(path: Path) -> dict[str, Any]:
    """Read the configuration from a flat ``key = value`` text file.

    A section header is injected so that files do not need one. Files which already
    contain a ``[neighcnn]`` section are read as well.

    Raises
    ------
    configparser.Error
        Raised if the file could not be parsed.

    """
    text = path.read_text(encoding="utf-8")
    if f"[{_FLAT_SECTION}]" not in text:
        text = f"[{_FLAT_SECTION}]\n" + text

    config = configparser.ConfigParser(
        comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";")
    )
    config.read_string(text, source=str(path))

    items = config[_FLAT_SECTION].items()
    return {key.replace("-", "_"): value for key, value in items}


def _read_toml_config(path: Path) -> dict[str, Any]:
    """Read the configuration from a ``*.toml`` file.

    Keys are taken from the ``[tool.neighcnn]`` table if it exists and from the top
    level otherwise.

    Raises
    ------
    tomli.TOMLDecodeError
        Raised if ``*.toml`` could not be read.

    """
    config = tomli.loads(path.read_text(encoding="utf-8"))
    config = config.get("tool", {}).get("neighcnn", config)
    return {key.replace("-", "_"): value for key, value in config.items()}


def get_config_reader(path: Path) -> Callable[[Path], dict[str, Any]]:
    """Get a loader for a config file."""
    loaders = {"*.toml": _read_toml_config}

    for pattern, loader in loaders.items():
        matches = fnmatch.fnmatch(path.as_posix(), pattern)

        if matches:
            return loader
    else:
        return _read_flat_config
