"""This module holds the plugin manager."""
from __future__ import annotations

import pluggy
from _neighcnn import hookspecs


def get_plugin_manager() -> pluggy.PluginManager:
    """Get the plugin manager."""
    pm = pluggy.PluginManager("neighcnn")
    pm.add_hookspecs(hookspecs)
    pm.load_setuptools_entrypoints("neighcnn")

    return pm
