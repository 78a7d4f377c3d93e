"""Add a command to train a despeckling network."""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

import click
from _neighcnn.click import ColoredCommand
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.dataset import read_manifest
from _neighcnn.execute import main
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import ExtractorKind
from _neighcnn.features import FeatureExtractor
from _neighcnn.live import LiveTraining
from _neighcnn.losses import LossConfig
from _neighcnn.network import build_model
from _neighcnn.network import NeighCNNConfig
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.trainer import TrainConfig
from _neighcnn.trainer import train as train_network
from _neighcnn.trainer import TrainHistory


_MODEL_KEYS = ["depth", "filters", "kernel_size"]
_LOSS_KEYS = ["alpha_n", "beta_n", "n_blocks", "loss"]
_TRAIN_KEYS = [
    "learning_rate",
    "batch_size",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
    "max_epochs",
    "patience",
    "min_delta",
    "patch_size",
    "patch_stride",
    "patches_per_image",
]
"""List[str]: Keys of :class:`~_neighcnn.trainer.TrainConfig` which can be configured.

The Adam coefficients have no flags and can only be set in configuration files.

"""


@hookimpl(tryfirst=True)
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend the command line interface."""
    cli.add_command(train)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration of trainings.

    Values are validated when the configuration objects are built, so that invalid
    values surface as :class:`~_neighcnn.exceptions.ConfigurationError`.

    """
    for key in _MODEL_KEYS + _LOSS_KEYS + _TRAIN_KEYS:
        config[key] = get_first_non_none_value(
            config_from_cli, config_from_file, key=key
        )
    config["extractor"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="extractor",
        default=ExtractorKind.TINY_RANDOM.value,
    )
    config["out_checkpoint"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="out_checkpoint",
        callback=lambda x: x if x is None else Path(x),
    )
    config["resume"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="resume",
        callback=lambda x: x if x is None else Path(x),
    )


def _present(config: dict[str, Any], keys: list[str]) -> dict[str, Any]:
    return {key: config[key] for key in keys if config.get(key) is not None}


def model_config_from(config: dict[str, Any]) -> NeighCNNConfig:
    return NeighCNNConfig(**_present(config, _MODEL_KEYS))


def loss_config_from(config: dict[str, Any], **overrides: Any) -> LossConfig:
    """Build the loss configuration. The ``loss`` key holds the enabled components."""
    kwargs = _present(config, _LOSS_KEYS)
    if "loss" in kwargs:
        kwargs["enabled"] = kwargs.pop("loss")
    return LossConfig(**{**kwargs, **overrides})


def train_config_from(config: dict[str, Any]) -> TrainConfig:
    return TrainConfig(
        **_present(config, _TRAIN_KEYS),
        seed=config["seed"],
        precision=config["precision"],
        looks=config["looks"],
    )


def extractor_from(config: dict[str, Any], loss_config: LossConfig) -> FeatureExtractor:
    """Build the extractor of the perceptual loss from the ``extractor`` key."""
    if config["extractor"] == ExtractorKind.TINY_RANDOM.value:
        return build_feature_extractor(
            ExtractorKind.TINY_RANDOM, loss_config.n_blocks, config["seed"]
        )
    return build_feature_extractor(
        ExtractorKind.FILE, loss_config.n_blocks, Path(config["extractor"])
    )


def log_history(history: TrainHistory) -> None:
    """Summarize the outcome of early stopping."""
    if history.best_epoch is None:
        return
    reason = (
        "stopped early" if history.stopped_early else "reached the maximum of epochs"
    )
    console.print(
        f"Best epoch {history.best_epoch} with a validation loss of "
        f"{history.best_validation_loss:.6g}. Training {reason} after epoch "
        f"{history.stopping_epoch}."
    )


def _train(session: Session) -> None:
    config = session.config
    model_config = model_config_from(config)
    loss_config = loss_config_from(config)
    train_config = train_config_from(config)
    extractor = extractor_from(config, loss_config)
    manifest = read_manifest(config["manifest"])

    out = config["out_checkpoint"]
    out.parent.mkdir(parents=True, exist_ok=True)

    model = build_model(model_config, train_config.seed)
    with LiveTraining.from_session(session, title=loss_config.label) as live:
        checkpoint, history = train_network(
            model,
            manifest,
            loss_config,
            train_config,
            extractor,
            out=out,
            resume=config["resume"],
            **live.callbacks,
        )

    session.results["checkpoint"] = checkpoint
    session.results["history"] = history
    if config["verbose"] >= 1:
        log_history(history)
        console.print(f"The best checkpoint was written to {out}.")


@click.command(cls=ColoredCommand)
@click.argument("out_checkpoint", type=click.Path(dir_okay=False, resolve_path=True))
@click.option(
    "--resume",
    type=click.Path(exists=True, dir_okay=False, resolve_path=True),
    default=None,
    help="Continue the training stored in a '*.last.ncnn' checkpoint.",
)
def train(**config_from_cli: Any) -> None:
    """Train a network on the pairs of a manifest.

    The checkpoint with the lowest validation loss is written to OUT_CHECKPOINT. Next to
    it, a resumable checkpoint of the last epoch and a history of all epochs are kept.

    """
    config_from_cli["command"] = "train"
    session = main(config_from_cli, _train)
    sys.exit(session.exit_code)
