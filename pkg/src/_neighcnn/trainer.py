"""Train despeckling networks and run the experiments around them.

Training shuffles the training patches with a generator derived from the seed and the
epoch, so that a resumed run visits the batches in the same order as an uninterrupted
one. After every epoch, the loss on the validation patches is computed in infer mode
and training stops once it has not improved for ``patience`` epochs.

If an output path is given, three files are written.

- ``<out>`` holds the parameters with the lowest validation loss.
- ``<out>.last.ncnn`` is rewritten after every completed epoch and holds everything
  needed to resume training.
- ``<out>.history.jsonl`` receives one JSON record per epoch.

"""
from __future__ import annotations

import contextlib
import json
import time
from pathlib import Path
from typing import Any
from typing import Callable
from typing import ContextManager
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import attr
import numpy as np
from _neighcnn import tensor as T
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.checkpoint import flatten_arrays
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.checkpoint import save_checkpoint
from _neighcnn.config_utils import Precision
from _neighcnn.console import render_to_plain_text
from _neighcnn.dataset import DatasetManifest
from _neighcnn.dataset import Split
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import NumericalError
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import FeatureExtractor
from _neighcnn.losses import LossComponent
from _neighcnn.losses import LossConfig
from _neighcnn.losses import total_loss
from _neighcnn.metrics import evaluate_set
from _neighcnn.metrics import format_number
from _neighcnn.metrics import MetricReport
from _neighcnn.network import build_model
from _neighcnn.network import despeckle_image
from _neighcnn.network import forward
from _neighcnn.network import Model
from _neighcnn.network import MODEL_KIND
from _neighcnn.network import NeighCNNConfig
from _neighcnn.optim import adam_step
from _neighcnn.optim import AdamConfig
from _neighcnn.optim import AdamState
from _neighcnn.optim import init_adam_state
from _neighcnn.speckle import extract_patches
from _neighcnn.tensor import Mode
from _neighcnn.tensor import Tensor
from rich.table import Table


__all__ = [
    "EpochRecord",
    "TrainConfig",
    "TrainHistory",
    "run_ablation",
    "run_depth_sweep",
    "run_weight_sweep",
    "train",
]


LAST_CHECKPOINT_SUFFIX = ".last.ncnn"
HISTORY_SUFFIX = ".history.jsonl"

DEFAULT_ABLATION_COMBOS = ("per", "eu", "per+n", "eu+n", "eu+per", "eu+per+n")
DEFAULT_DEPTHS = tuple(range(7, 17))
DEFAULT_ALPHAS = (0.005, 0.001, 0.0005, 0.0001, 0.00005)
DEFAULT_BETAS = (0.002, 0.001, 0.0005)


def _at_least(minimum: int) -> Callable[[Any, attr.Attribute, Any], None]:
    def _validate(instance: Any, attribute: attr.Attribute, value: Any) -> None:
        if value is not None and value < minimum:
            raise ConfigurationError(
                f"{attribute.name} must be >= {minimum}, got {value}."
            )

    return _validate


def _optional_int(value: Any) -> int | None:
    return None if value is None else int(value)


def _optional_looks(value: Iterable[int] | None) -> tuple[int, ...] | None:
    return None if value is None else tuple(int(look) for look in value)


@attr.s(frozen=True)
class TrainConfig:
    """The optimizer, stopping rule, data preparation and numerical precision.

    Attributes
    ----------
    learning_rate : float
        The step size of Adam. A learning rate of zero leaves all parameters and the
        running statistics of batch normalization unchanged.
    min_delta : float
        The validation loss improves if it falls below ``(1 - min_delta)`` times the
        best validation loss so far.
    patch_size : int, optional
        Cut training and validation images into patches of this size. By default, the
        whole images are used.
    patches_per_image : int, optional
        Draw a random subset of the patches of every image.
    looks : tuple of int, optional
        Train on a subset of the looks in the manifest.

    """

    learning_rate = attr.ib(default=1e-4, type=float, converter=float)
    batch_size = attr.ib(default=16, type=int, converter=int, validator=_at_least(1))
    adam_beta1 = attr.ib(default=0.9, type=float, converter=float)
    adam_beta2 = attr.ib(default=0.999, type=float, converter=float)
    adam_epsilon = attr.ib(default=1e-8, type=float, converter=float)
    max_epochs = attr.ib(default=100, type=int, converter=int, validator=_at_least(1))
    patience = attr.ib(default=10, type=int, converter=int, validator=_at_least(1))
    min_delta = attr.ib(default=1e-5, type=float, converter=float)
    seed = attr.ib(default=0, type=int, converter=int)
    precision = attr.ib(default=Precision.DOUBLE, type=Precision, converter=Precision)
    patch_size = attr.ib(
        default=None,
        type=Optional[int],
        converter=_optional_int,
        validator=_at_least(1),
    )
    patch_stride = attr.ib(
        default=None,
        type=Optional[int],
        converter=_optional_int,
        validator=_at_least(1),
    )
    patches_per_image = attr.ib(
        default=None,
        type=Optional[int],
        converter=_optional_int,
        validator=_at_least(1),
    )
    looks = attr.ib(
        default=None, type=Optional[Tuple[int, ...]], converter=_optional_looks
    )

    @learning_rate.validator
    def _check_learning_rate(self, attribute: attr.Attribute, value: float) -> None:
        if not value >= 0:
            raise ConfigurationError(
                f"The learning rate must be non-negative, got {value}."
            )

    @min_delta.validator
    def _check_min_delta(self, attribute: attr.Attribute, value: float) -> None:
        if not 0 <= value < 1:
            raise ConfigurationError(f"min_delta must be in [0, 1), got {value}.")

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(
            self.learning_rate, self.adam_beta1, self.adam_beta2, self.adam_epsilon
        )

    def to_dict(self) -> dict[str, Any]:
        config = attr.asdict(self)
        config["precision"] = self.precision.value
        config["looks"] = None if self.looks is None else list(self.looks)
        return config


@attr.s(frozen=True)
class EpochRecord:
    epoch = attr.ib(type=int)
    train_loss = attr.ib(type=float)
    validation_loss = attr.ib(type=float)
    components = attr.ib(factory=dict, type=Dict[str, float])
    """Dict[str, float]: The mean raw value of every enabled loss component."""
    wall_time = attr.ib(default=0.0, type=float)
    is_best = attr.ib(default=False, type=bool)

    def to_dict(self) -> dict[str, Any]:
        record = {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "validation_loss": self.validation_loss,
        }
        for component in LossComponent:
            record[component.value] = self.components.get(component.value)
        record["wall_time"] = self.wall_time
        record["is_best"] = self.is_best
        return record

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> EpochRecord:
        components = {
            c.value: float(record[c.value])
            for c in LossComponent
            if record.get(c.value) is not None
        }
        return cls(
            epoch=int(record["epoch"]),
            train_loss=float(record["train_loss"]),
            validation_loss=float(record["validation_loss"]),
            components=components,
            wall_time=float(record.get("wall_time", 0.0)),
            is_best=bool(record.get("is_best", False)),
        )


@attr.s
class TrainHistory:
    """The records of all completed epochs and the outcome of early stopping."""

    records = attr.ib(factory=list, type=List[EpochRecord])
    best_epoch = attr.ib(default=None, type=Optional[int])
    best_validation_loss = attr.ib(default=float("inf"), type=float)
    stopping_epoch = attr.ib(default=None, type=Optional[int])
    stopped_early = attr.ib(default=False, type=bool)
    best_checkpoint = attr.ib(default=None, type=Optional[Path])

    @property
    def train_losses(self) -> list[float]:
        return [record.train_loss for record in self.records]

    @property
    def validation_losses(self) -> list[float]:
        return [record.validation_loss for record in self.records]


@attr.s(frozen=True, eq=False)
class PatchSet:
    """Stacked clean and speckled patches with shape ``(n, 1, size, size)``."""

    clean = attr.ib(type=np.ndarray)
    speckled = attr.ib(type=np.ndarray)

    def __len__(self) -> int:
        return len(self.clean)


def load_patches(
    manifest: DatasetManifest,
    split: Split | str,
    config: TrainConfig | None = None,
) -> PatchSet:
    """Load the pairs of a split and cut them into patches.

    The random subset of patches of the ``i``-th image is drawn with a generator seeded
    by the training seed and ``i``.

    """
    config = TrainConfig() if config is None else config
    split = Split(split)
    entries = manifest.select(config.looks, split)
    if not entries:
        looks = "all looks" if config.looks is None else f"looks {list(config.looks)}"
        raise DataError(f"The manifest has no {split.value} pairs for {looks}.")

    clean, speckled = [], []
    for index, entry in enumerate(entries):
        pair = manifest.load_pair(entry)
        if config.patch_size is None:
            patches = [pair]
        else:
            patches = extract_patches(
                pair,
                config.patch_size,
                config.patch_stride,
                seed=np.random.SeedSequence([config.seed, index]),
                n_patches=config.patches_per_image,
            )
        clean.extend(patch.clean.data for patch in patches)
        speckled.extend(patch.speckled.data for patch in patches)

    dtype = config.precision.dtype
    return PatchSet(
        np.concatenate(clean).astype(dtype), np.concatenate(speckled).astype(dtype)
    )


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    return rng.permutation(n)


def _batches(n: int, batch_size: int) -> Iterable[slice]:
    for start in range(0, n, batch_size):
        yield slice(start, min(start + batch_size, n))


@attr.s(eq=False)
class _TrainingState:
    """Everything which changes from epoch to epoch and is stored for resumption."""

    adam = attr.ib(type=AdamState)
    epoch = attr.ib(default=0, type=int)
    best_state = attr.ib(factory=dict, type=Dict[str, np.ndarray])
    epochs_without_improvement = attr.ib(default=0, type=int)
    history = attr.ib(factory=TrainHistory, type=TrainHistory)


def train(
    model: Model,
    manifest: DatasetManifest,
    loss_config: LossConfig | None = None,
    train_config: TrainConfig | None = None,
    extractor: FeatureExtractor | None = None,
    out: Path | None = None,
    resume: Path | None = None,
    on_epoch_end: Callable[[EpochRecord], None] | None = None,
    on_batch_end: Callable[[int, int, float], None] | None = None,
) -> tuple[Checkpoint, TrainHistory]:
    """Train a model with Adam and stop early on the validation loss.

    Parameters
    ----------
    model : Model
        The model is trained in place. At the end, it holds the parameters with the
        lowest validation loss.
    manifest : DatasetManifest
        Needs pairs in the train and validation split.
    loss_config, train_config : LossConfig, TrainConfig
        Default to the published hyper-parameters.
    extractor : FeatureExtractor, optional
        The feature extractor of the perceptual loss. Defaults to a tiny random
        extractor with ``loss_config.n_blocks`` blocks.
    out : pathlib.Path, optional
        Path of the best checkpoint. The last checkpoint and the history are written
        next to it.
    resume : pathlib.Path, optional
        A last checkpoint of a previous run which is continued.
    on_epoch_end, on_batch_end : Callable, optional
        Called after every epoch with its record and after every batch with the epoch,
        the batch number and the batch loss.

    Returns
    -------
    checkpoint : Checkpoint
        The checkpoint with the lowest validation loss.
    history : TrainHistory

    Raises
    ------
    DataError
        If the train or validation split is empty.
    NumericalError
        If the loss or a gradient becomes non-finite.

    """
    loss_config = LossConfig() if loss_config is None else loss_config
    train_config = TrainConfig() if train_config is None else train_config
    dtype = train_config.precision.dtype
    if extractor is None:
        extractor = build_feature_extractor(n=loss_config.n_blocks)
    extractor = extractor.astype(dtype)
    model.astype(dtype)

    train_set = load_patches(manifest, Split.TRAIN, train_config)
    validation_set = load_patches(manifest, Split.VALIDATION, train_config)

    trainable = model.trainable_parameters()
    if resume is not None:
        state = _load_training_state(Path(resume), model)
    else:
        state = _TrainingState(
            adam=init_adam_state({name: p.value for name, p in trainable.items()}),
            best_state=model.state_dict(),
        )

    out = None if out is None else Path(out)
    if out is not None:
        _rewrite_history(out, state.history.records)

    metadata = {
        "loss": {
            **loss_config.to_dict(),
            "extractor_kind": extractor.kind.value,
            "extractor_source": extractor.source,
        },
        "train": train_config.to_dict(),
    }

    while (
        state.epoch < train_config.max_epochs
        and state.epochs_without_improvement < train_config.patience
    ):
        epoch = state.epoch + 1
        start = time.perf_counter()
        train_loss, components = _train_epoch(
            model,
            trainable,
            train_set,
            loss_config,
            train_config,
            extractor,
            state,
            epoch,
            on_batch_end,
        )
        validation_loss = _validation_loss(
            model, validation_set, loss_config, train_config, extractor
        )

        history = state.history
        is_best = validation_loss < history.best_validation_loss * (
            1 - train_config.min_delta
        ) or not np.isfinite(history.best_validation_loss)
        if is_best:
            history.best_epoch = epoch
            history.best_validation_loss = validation_loss
            state.best_state = model.state_dict()
            state.epochs_without_improvement = 0
        else:
            state.epochs_without_improvement += 1

        record = EpochRecord(
            epoch,
            train_loss,
            validation_loss,
            components,
            time.perf_counter() - start,
            is_best,
        )
        history.records.append(record)
        state.epoch = epoch

        if out is not None:
            if is_best:
                save_checkpoint(_best_checkpoint(model, state, metadata), out)
            save_checkpoint(
                _last_checkpoint(model, state, metadata),
                out.with_name(out.name + LAST_CHECKPOINT_SUFFIX),
            )
            with _history_path(out).open("a") as file:
                file.write(json.dumps(record.to_dict()) + "\n")
        if on_epoch_end is not None:
            on_epoch_end(record)

    history = state.history
    history.stopping_epoch = state.epoch
    history.stopped_early = state.epochs_without_improvement >= train_config.patience
    history.best_checkpoint = out

    model.load_state_dict(state.best_state)
    return _best_checkpoint(model, state, metadata), history


def _train_epoch(
    model: Model,
    trainable: dict[str, T.Parameter],
    patches: PatchSet,
    loss_config: LossConfig,
    config: TrainConfig,
    extractor: FeatureExtractor,
    state: _TrainingState,
    epoch: int,
    on_batch_end: Callable[[int, int, float], None] | None,
) -> tuple[float, dict[str, float]]:
    order = _epoch_order(config.seed, epoch, len(patches))
    total = 0.0
    components: Dict[str, float] = {}

    for batch_number, batch in enumerate(_batches(len(patches), config.batch_size), 1):
        indices = order[batch]
        try:
            with _statistics_context(config):
                speckled = Tensor(patches.speckled[indices])
                result = forward(model, speckled, Mode.TRAIN)
            clean = Tensor(patches.clean[indices])
            breakdown = total_loss(result.despeckled, clean, loss_config, extractor)
            breakdown.total.backward()
        except NumericalError as e:
            raise NumericalError(
                f"Training diverged in epoch {epoch}, batch {batch_number}. {e}"
            ) from e

        values = {name: p.value for name, p in trainable.items()}
        gradients = {
            name: np.zeros_like(p.value) if p.grad is None else p.grad
            for name, p in trainable.items()
        }
        updated, state.adam = adam_step(values, gradients, state.adam, config.adam)
        for name, parameter in trainable.items():
            parameter.assign(updated[name])

        size = len(indices)
        loss = breakdown.total.item()
        total += loss * size
        for component, value in breakdown.components.items():
            components[component.value] = components.get(component.value, 0.0) + (
                value * size
            )
        if on_batch_end is not None:
            on_batch_end(epoch, batch_number, loss)

    n = len(patches)
    return total / n, {name: value / n for name, value in components.items()}


def _statistics_context(config: TrainConfig) -> ContextManager[None]:
    # A zero learning rate freezes the model including its running statistics.
    if config.learning_rate == 0:
        return T.frozen_statistics()
    return contextlib.nullcontext()


def _validation_loss(
    model: Model,
    patches: PatchSet,
    loss_config: LossConfig,
    config: TrainConfig,
    extractor: FeatureExtractor,
) -> float:
    total = 0.0
    with T.no_grad():
        for batch in _batches(len(patches), config.batch_size):
            result = forward(model, Tensor(patches.speckled[batch]), Mode.INFER)
            breakdown = total_loss(
                result.despeckled, Tensor(patches.clean[batch]), loss_config, extractor
            )
            total += breakdown.total.item() * (batch.stop - batch.start)
    return total / len(patches)


def _history_path(out: Path) -> Path:
    return out.with_name(out.name + HISTORY_SUFFIX)


def _rewrite_history(out: Path, records: Sequence[EpochRecord]) -> None:
    _history_path(out).write_text(
        "".join(json.dumps(record.to_dict()) + "\n" for record in records)
    )


def _stopping_metadata(state: _TrainingState) -> dict[str, Any]:
    history = state.history
    return {
        "epoch": state.epoch,
        "best_epoch": history.best_epoch,
        "best_validation_loss": float(history.best_validation_loss),
        "epochs_without_improvement": state.epochs_without_improvement,
    }


def _best_checkpoint(
    model: Model, state: _TrainingState, metadata: dict[str, Any]
) -> Checkpoint:
    return Checkpoint(
        MODEL_KIND,
        state.best_state,
        model.config.to_dict(),
        metadata["loss"],
        {**_stopping_metadata(state), "train": metadata["train"]},
    )


def _last_checkpoint(
    model: Model, state: _TrainingState, metadata: dict[str, Any]
) -> Checkpoint:
    tensors = flatten_arrays(
        {
            "model": model.state_dict(),
            "best": state.best_state,
            "adam": {"m": state.adam.m, "v": state.adam.v},
        }
    )
    return Checkpoint(
        MODEL_KIND,
        tensors,
        model.config.to_dict(),
        metadata["loss"],
        {
            **_stopping_metadata(state),
            "adam_step": state.adam.step,
            "train": metadata["train"],
            "history": [record.to_dict() for record in state.history.records],
        },
    )


def _load_training_state(path: Path, model: Model) -> _TrainingState:
    checkpoint = load_checkpoint(path)
    if checkpoint.model_config != model.config.to_dict():
        raise CheckpointError(
            f"{path} was trained with the architecture {checkpoint.model_config}, but "
            f"the model has {model.config.to_dict()}."
        )
    metadata = checkpoint.metadata
    if "adam_step" not in metadata or "epoch" not in metadata:
        raise CheckpointError(
            f"{path} cannot be resumed because it lacks the optimizer state. Pass the "
            f"checkpoint ending with {LAST_CHECKPOINT_SUFFIX!r}."
        )

    dtype = model.dtype
    model.load_state_dict(checkpoint.tensors_with_prefix("model."))
    trainable = model.trainable_parameters()

    def _moments(prefix: str) -> dict[str, np.ndarray]:
        moments = checkpoint.tensors_with_prefix(prefix)
        if set(moments) != set(trainable):
            raise CheckpointError(f"The optimizer state in {path} is incomplete.")
        return {name: moments[name].astype(dtype) for name in trainable}

    history = TrainHistory(
        records=[EpochRecord.from_dict(r) for r in metadata.get("history", [])],
        best_epoch=metadata.get("best_epoch"),
        best_validation_loss=float(metadata.get("best_validation_loss", float("inf"))),
    )
    return _TrainingState(
        adam=AdamState(
            int(metadata["adam_step"]), _moments("adam.m."), _moments("adam.v.")
        ),
        epoch=int(metadata["epoch"]),
        best_state={
            name: value.astype(dtype)
            for name, value in checkpoint.tensors_with_prefix("best.").items()
        },
        epochs_without_improvement=int(metadata.get("epochs_without_improvement", 0)),
        history=history,
    )


def model_despeckler(model: Model) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a model as a function which returns clamped despeckled images."""
    return lambda image: despeckle_image(model, image)[1]


def _make_directory(directory: Path | None) -> None:
    if directory is not None:
        Path(directory).mkdir(parents=True, exist_ok=True)


def _unique_labels(labels: Sequence[str]) -> list[str]:
    seen: Dict[str, int] = {}
    unique = []
    for label in labels:
        seen[label] = seen.get(label, 0) + 1
        unique.append(label if seen[label] == 1 else f"{label} ({seen[label]})")
    return unique


def run_ablation(
    combos: Sequence[LossConfig],
    manifest: DatasetManifest,
    model_config: NeighCNNConfig | None = None,
    train_config: TrainConfig | None = None,
    extractor: FeatureExtractor | None = None,
    looks: Iterable[int] | None = None,
    out_dir: Path | None = None,
    on_train_start: Callable[[str], None] | None = None,
    **callbacks: Any,
) -> MetricReport:
    """Train one model per loss configuration and compare them on the test split.

    Every model starts from the same initialization, so identical configurations yield
    identical columns.

    """
    if len(combos) < 2:
        raise ConfigurationError("An ablation needs at least two loss configurations.")
    model_config = NeighCNNConfig() if model_config is None else model_config
    train_config = TrainConfig() if train_config is None else train_config
    _make_directory(out_dir)

    despecklers = {}
    for label, loss_config in zip(_unique_labels([c.label for c in combos]), combos):
        if on_train_start is not None:
            on_train_start(label)
        model = build_model(model_config, train_config.seed)
        out = None if out_dir is None else Path(out_dir) / f"{label}.ncnn"
        train(model, manifest, loss_config, train_config, extractor, out, **callbacks)
        despecklers[label] = model_despeckler(model)

    return evaluate_set(manifest, despecklers, looks=looks)


@attr.s(frozen=True)
class SweepPoint:
    """The test metrics of one training of a sweep."""

    parameter = attr.ib(type=str)
    value = attr.ib(type=float)
    psnr_db = attr.ib(type=float)
    ssim = attr.ib(type=float)
    uqi = attr.ib(type=float)


@attr.s
class SweepResult:
    points = attr.ib(factory=list, type=List[SweepPoint])
    look = attr.ib(default=4, type=int)
    decimals = attr.ib(default=4, type=int)

    def to_csv(self, path: Path) -> None:
        lines = ["parameter,value,psnr_db,ssim,uqi"]
        for p in self.points:
            numbers = [
                format_number(x, self.decimals) for x in (p.psnr_db, p.ssim, p.uqi)
            ]
            lines.append(",".join([p.parameter, f"{p.value:g}", *numbers]))
        Path(path).write_text("\n".join(lines) + "\n")

    def to_table(self, title: str | None = None) -> Table:
        table = Table(title=title)
        for column in ("Parameter", "Value", "PSNR", "SSIM", "UQI"):
            justify = "left" if column == "Parameter" else "right"
            table.add_column(column, justify=justify)
        for p in self.points:
            table.add_row(
                p.parameter,
                f"{p.value:g}",
                *(format_number(x, self.decimals) for x in (p.psnr_db, p.ssim, p.uqi)),
            )
        return table

    def write(self, directory: Path, name: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        text_path = directory / f"{name}.txt"
        self.to_csv(csv_path)
        text_path.write_text(render_to_plain_text(self.to_table()))
        return csv_path, text_path


def _evaluate_single(
    manifest: DatasetManifest, model: Model, look: int, parameter: str, value: float
) -> SweepPoint:
    report = evaluate_set(manifest, {"model": model_despeckler(model)}, looks=[look])
    row = report.get(look, "model")
    return SweepPoint(parameter, value, row.psnr_db, row.ssim, row.uqi)


def run_depth_sweep(
    depths: Sequence[int],
    manifest: DatasetManifest,
    model_config: NeighCNNConfig | None = None,
    loss_config: LossConfig | None = None,
    train_config: TrainConfig | None = None,
    extractor: FeatureExtractor | None = None,
    look: int = 4,
    out_dir: Path | None = None,
    on_train_start: Callable[[str], None] | None = None,
    **callbacks: Any,
) -> SweepResult:
    """Train one model per depth and report the test metrics at a single look."""
    if not depths:
        raise ConfigurationError("The depth sweep needs at least one depth.")
    model_config = NeighCNNConfig() if model_config is None else model_config
    train_config = TrainConfig() if train_config is None else train_config
    _make_directory(out_dir)

    configs = [attr.evolve(model_config, depth=depth) for depth in depths]

    points = []
    for depth, config in zip(depths, configs):
        if on_train_start is not None:
            on_train_start(f"depth {depth}")
        model = build_model(config, train_config.seed)
        out = None if out_dir is None else Path(out_dir) / f"depth-{depth:02d}.ncnn"
        train(model, manifest, loss_config, train_config, extractor, out, **callbacks)
        points.append(_evaluate_single(manifest, model, look, "depth", depth))
    return SweepResult(points, look)


def run_weight_sweep(
    alphas: Sequence[float],
    betas: Sequence[float],
    manifest: DatasetManifest,
    model_config: NeighCNNConfig | None = None,
    loss_config: LossConfig | None = None,
    train_config: TrainConfig | None = None,
    extractor: FeatureExtractor | None = None,
    look: int = 4,
    out_dir: Path | None = None,
    on_train_start: Callable[[str], None] | None = None,
    **callbacks: Any,
) -> SweepResult:
    """Vary one loss coefficient at a time while the other keeps its value."""
    if not alphas and not betas:
        raise ConfigurationError("The weight sweep needs at least one alpha or beta.")
    model_config = NeighCNNConfig() if model_config is None else model_config
    loss_config = LossConfig() if loss_config is None else loss_config
    train_config = TrainConfig() if train_config is None else train_config
    _make_directory(out_dir)

    grid = [("alpha_n", alpha) for alpha in alphas] + [
        ("beta_n", beta) for beta in betas
    ]
    configs = [attr.evolve(loss_config, **{name: value}) for name, value in grid]

    points = []
    for (name, value), config in zip(grid, configs):
        if on_train_start is not None:
            on_train_start(f"{name} {value:g}")
        model = build_model(model_config, train_config.seed)
        out = None if out_dir is None else Path(out_dir) / f"{name}-{value:g}.ncnn"
        train(model, manifest, config, train_config, extractor, out, **callbacks)
        points.append(_evaluate_single(manifest, model, look, name, value))
    return SweepResult(points, look)
