"""Implements the command line interface."""
from __future__ import annotations

import sys
from typing import Any

import click
import pluggy
from _neighcnn.click import ColoredGroup
from _neighcnn.config import hookimpl
from _neighcnn.pluginmanager import get_plugin_manager
from packaging.version import parse as parse_version


_CONTEXT_SETTINGS: dict[str, Any] = {"help_option_names": ("-h", "--help")}


if parse_version(click.__version__) < parse_version("8"):
    _VERSION_OPTION_KWARGS: dict[str, Any] = {}
else:
    _VERSION_OPTION_KWARGS = {"package_name": "neighcnn"}


def _extend_command_line_interface(cli: click.Group) -> click.Group:
    """Add parameters from plugins to the commandline interface."""
    pm = _prepare_plugin_manager()
    pm.hook.neighcnn_extend_command_line_interface(cli=cli)
    _sort_options_for_each_command_alphabetically(cli)
    return cli


def _prepare_plugin_manager() -> pluggy.PluginManager:
    """Prepare the plugin manager."""
    pm = get_plugin_manager()
    pm.register(sys.modules[__name__])
    pm.hook.neighcnn_add_hooks(pm=pm)
    return pm


def _sort_options_for_each_command_alphabetically(cli: click.Group) -> None:
    """Sort command line options and arguments for each command alphabetically.

    Arguments keep their relative order because their names are sorted as well.

    """
    for command in cli.commands:
        cli.commands[command].params = sorted(
            cli.commands[command].params, key=lambda x: x.name
        )


@hookimpl
def neighcnn_add_hooks(pm: pluggy.PluginManager) -> None:
    """Add hooks."""
    from _neighcnn import ablate_command
    from _neighcnn import config
    from _neighcnn import despeckle_command
    from _neighcnn import eval_command
    from _neighcnn import features
    from _neighcnn import gen_data_command
    from _neighcnn import gradcheck
    from _neighcnn import gradcheck_command
    from _neighcnn import live
    from _neighcnn import logging
    from _neighcnn import losses
    from _neighcnn import network
    from _neighcnn import parameters
    from _neighcnn import sweep_depth_command
    from _neighcnn import sweep_weights_command
    from _neighcnn import train_command

    pm.register(ablate_command)
    pm.register(config)
    pm.register(despeckle_command)
    pm.register(eval_command)
    pm.register(features)
    pm.register(gen_data_command)
    pm.register(gradcheck)
    pm.register(gradcheck_command)
    pm.register(live)
    pm.register(logging)
    pm.register(losses)
    pm.register(network)
    pm.register(parameters)
    pm.register(sweep_depth_command)
    pm.register(sweep_weights_command)
    pm.register(train_command)


@click.group(cls=ColoredGroup, context_settings=_CONTEXT_SETTINGS)
@click.version_option(**_VERSION_OPTION_KWARGS)
def cli() -> None:
    """Despeckle SAR images with a residual network and a neighbourhood loss."""
    pass


_extend_command_line_interface(cli)
