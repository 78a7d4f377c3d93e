"""The residual despeckling network.

The network is a stack of same-padded convolutions. The first layer is a convolution
followed by a ReLU, the middle layers add batch normalization between convolution and
ReLU, and the last layer is a plain convolution which predicts the residual. The
despeckled image is the speckled input minus the residual.

"""
from __future__ import annotations

from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional

import attr
import numpy as np
from _neighcnn import tensor as T
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.config import hookimpl
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import ShapeError
from _neighcnn.features import build_feature_extractor
from _neighcnn.gradcheck import GradCheckProblem
from _neighcnn.gradcheck import GradientCheck
from _neighcnn.tensor import Mode
from _neighcnn.tensor import Parameter
from _neighcnn.tensor import Tensor


__all__ = [
    "ForwardResult",
    "Model",
    "NeighCNNConfig",
    "build_model",
    "despeckle_image",
    "forward",
    "model_from_checkpoint",
    "model_to_checkpoint",
]


MODEL_KIND = "model"


def _positive(instance: Any, attribute: attr.Attribute, value: int) -> None:
    if value < 1:
        raise ConfigurationError(f"{attribute.name} must be >= 1, got {value}.")


@attr.s(frozen=True)
class NeighCNNConfig:
    """The architecture of the network."""

    depth = attr.ib(default=12, type=int, converter=int)
    filters = attr.ib(default=64, type=int, converter=int, validator=_positive)
    kernel_size = attr.ib(default=3, type=int, converter=int)

    @depth.validator
    def _check_depth(self, attribute: attr.Attribute, value: int) -> None:
        if value < 2:
            raise ConfigurationError(f"The depth must be >= 2, got {value}.")

    @kernel_size.validator
    def _check_kernel_size(self, attribute: attr.Attribute, value: int) -> None:
        if value < 1 or value % 2 == 0:
            raise ConfigurationError(
                f"The kernel size must be a positive odd number, got {value}."
            )

    def to_dict(self) -> dict[str, int]:
        return attr.asdict(self)


@attr.s(eq=False)
class ConvLayer:
    kernel = attr.ib(type=Parameter)
    bias = attr.ib(type=Parameter)

    def __call__(self, x: Tensor) -> Tensor:
        padding = self.kernel.shape[-1] // 2
        return T.conv2d(x, self.kernel.tensor(), self.bias.tensor(), padding=padding)


@attr.s(eq=False)
class BatchNormLayer:
    gamma = attr.ib(type=Parameter)
    beta = attr.ib(type=Parameter)
    running_mean = attr.ib(type=Parameter)
    running_var = attr.ib(type=Parameter)
    momentum = attr.ib(default=0.1, type=float)
    epsilon = attr.ib(default=1e-5, type=float)

    def __call__(self, x: Tensor, mode: Mode) -> Tensor:
        return T.batch_norm(
            x,
            self.gamma.tensor(),
            self.beta.tensor(),
            self.running_mean,
            self.running_var,
            mode,
            self.momentum,
            self.epsilon,
        )


@attr.s(eq=False)
class Layer:
    """One convolution with optional batch normalization and activation."""

    conv = attr.ib(type=ConvLayer)
    batch_norm = attr.ib(default=None, type=Optional[BatchNormLayer])
    activation = attr.ib(default=True, type=bool)

    def __call__(self, x: Tensor, mode: Mode) -> Tensor:
        x = self.conv(x)
        if self.batch_norm is not None:
            x = self.batch_norm(x, mode)
        if self.activation:
            x = T.relu(x)
        return x


@attr.s(eq=False)
class Model:
    """The layer stack and its named parameters."""

    config = attr.ib(type=NeighCNNConfig)
    layers = attr.ib(factory=list, type=List[Layer])

    def parameters(self) -> dict[str, Parameter]:
        """Return all parameters in layer order, including running statistics."""
        return {parameter.name: parameter for parameter in self._iter_parameters()}

    def _iter_parameters(self) -> Iterator[Parameter]:
        for layer in self.layers:
            yield layer.conv.kernel
            yield layer.conv.bias
            if layer.batch_norm is not None:
                yield layer.batch_norm.gamma
                yield layer.batch_norm.beta
                yield layer.batch_norm.running_mean
                yield layer.batch_norm.running_var

    def trainable_parameters(self) -> dict[str, Parameter]:
        return {
            name: parameter
            for name, parameter in self.parameters().items()
            if parameter.trainable
        }

    @property
    def n_trainable(self) -> int:
        """int: The number of trainable scalars."""
        return int(np.sum([p.size for p in self.trainable_parameters().values()]))

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].conv.kernel.value.dtype

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Replace all parameter values, keeping the dtype of the model."""
        parameters = self.parameters()
        missing = sorted(set(parameters) - set(state))
        unexpected = sorted(set(state) - set(parameters))
        if missing or unexpected:
            raise CheckpointError(
                f"The parameters do not match the architecture. Missing: {missing}. "
                f"Unexpected: {unexpected}."
            )
        for name, parameter in parameters.items():
            if state[name].shape != parameter.shape:
                raise CheckpointError(
                    f"The parameter {name!r} has shape {state[name].shape}, but the "
                    f"architecture requires {parameter.shape}."
                )
            parameter.assign(state[name])

    def astype(self, dtype: str | np.dtype) -> Model:
        """Cast all parameters in place and return the model."""
        for parameter in self.parameters().values():
            parameter.value = T._to_read_only(parameter.value.astype(dtype))
            parameter.grad = None
        return self


@attr.s(frozen=True, eq=False)
class ForwardResult:
    """The outputs of a forward pass.

    Attributes
    ----------
    residual : Tensor
        The predicted additive noise.
    despeckled : Tensor
        The speckled input minus the residual, not clamped.
    clamped : Tensor, optional
        In infer mode, the despeckled image clamped to [0, 1].

    """

    residual = attr.ib(type=Tensor)
    despeckled = attr.ib(type=Tensor)
    clamped = attr.ib(default=None, type=Optional[Tensor])


def build_model(config: NeighCNNConfig | None = None, seed: int = 0) -> Model:
    """Build a model and initialize it deterministically from a seed.

    Kernels are drawn from a He-normal distribution. Biases and batch normalization
    shifts are zero, scales are one, running means zero and running variances one.

    Examples
    --------
    >>> build_model(NeighCNNConfig(depth=12, filters=64, kernel_size=3)).n_trainable
    371777
    >>> [layer.batch_norm is None for layer in build_model(NeighCNNConfig(2, 4)).layers]
    [True, True]

    """
    config = NeighCNNConfig() if config is None else config
    rng = np.random.default_rng(seed)
    k = config.kernel_size

    layers = []
    for index in range(1, config.depth + 1):
        in_channels = 1 if index == 1 else config.filters
        out_channels = 1 if index == config.depth else config.filters
        std = np.sqrt(2.0 / (in_channels * k * k))
        kernel = rng.standard_normal((out_channels, in_channels, k, k)) * std
        conv = ConvLayer(
            Parameter(f"conv{index:02d}.kernel", kernel),
            Parameter(f"conv{index:02d}.bias", np.zeros(out_channels)),
        )

        batch_norm = None
        if 1 < index < config.depth:
            name = f"bn{index:02d}"
            batch_norm = BatchNormLayer(
                Parameter(f"{name}.gamma", np.ones(out_channels)),
                Parameter(f"{name}.beta", np.zeros(out_channels)),
                Parameter(f"{name}.running_mean", np.zeros(out_channels), False),
                Parameter(f"{name}.running_var", np.ones(out_channels), False),
            )
        layers.append(Layer(conv, batch_norm, activation=index < config.depth))

    return Model(config, layers)


def forward(
    model: Model, speckled: Tensor, mode: Mode | str = Mode.TRAIN
) -> ForwardResult:
    """Despeckle a batch of images with shape ``(batch, 1, height, width)``."""
    mode = Mode(mode)
    if speckled.ndim != 4 or speckled.shape[1] != 1:
        raise ShapeError(
            f"The network expects images of shape (batch, 1, height, width), got "
            f"{speckled.shape}."
        )
    if min(speckled.shape[2:]) < model.config.kernel_size:
        raise ShapeError(
            f"Images of size {speckled.shape[2]}x{speckled.shape[3]} are smaller than "
            f"the kernel size {model.config.kernel_size}."
        )

    x = speckled
    for layer in model.layers:
        x = layer(x, mode)
    residual = x
    despeckled = T.subtract(speckled, residual)

    clamped = None
    if mode == Mode.INFER:
        clamped = Tensor(np.clip(despeckled.data, 0.0, 1.0))
    return ForwardResult(residual, despeckled, clamped)


def despeckle_image(model: Model, image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Despeckle a single two-dimensional image in infer mode.

    Returns the despeckled image and its version clamped to [0, 1].

    """
    image = np.asarray(image, dtype=model.dtype)
    if image.ndim != 2:
        raise ShapeError(f"Expected a two-dimensional image, got shape {image.shape}.")
    with T.no_grad():
        result = forward(model, Tensor(image[None, None]), Mode.INFER)
    return result.despeckled.data[0, 0], result.clamped.data[0, 0]


def model_to_checkpoint(model: Model, **kwargs: Any) -> Checkpoint:
    """Store the parameters and running statistics of a model in a checkpoint."""
    return Checkpoint(MODEL_KIND, model.state_dict(), model.config.to_dict(), **kwargs)


def model_from_checkpoint(checkpoint: Checkpoint) -> Model:
    """Rebuild a model from a checkpoint."""
    if checkpoint.kind != MODEL_KIND:
        raise CheckpointError(
            f"The checkpoint holds a {checkpoint.kind!r}, but a {MODEL_KIND!r} is "
            "required."
        )
    try:
        config = NeighCNNConfig(**checkpoint.model_config)
    except (TypeError, ConfigurationError) as e:
        raise CheckpointError(f"The model configuration is invalid: {e}") from e

    state: Dict[str, np.ndarray] = checkpoint.tensors_with_prefix("model.") or {
        name: value
        for name, value in checkpoint.tensors.items()
        if not name.startswith("adam.")
    }
    model = build_model(config)
    dtype = next(iter(state.values())).dtype if state else np.float64
    model.astype(dtype)
    model.load_state_dict(state)
    return model


def _network_problem(rng: np.random.Generator) -> GradCheckProblem:
    from _neighcnn.losses import LossConfig
    from _neighcnn.losses import total_loss

    model = build_model(NeighCNNConfig(depth=6, filters=4), int(rng.integers(2**31)))
    for parameter in model.trainable_parameters().values():
        parameter.assign(parameter.value + rng.normal(0, 0.1, parameter.shape))
    extractor = build_feature_extractor(n=3, seed_or_path=int(rng.integers(2**31)))
    clean = T.tensor(rng.uniform(0, 1, size=(2, 1, 8, 8)))
    speckled = T.tensor(clean.data * rng.gamma(4.0, 0.25, size=clean.shape))
    config = LossConfig(alpha_n=0.1, beta_n=0.01)

    def _function(y: Tensor) -> Tensor:
        despeckled = forward(model, y, Mode.TRAIN).despeckled
        return total_loss(despeckled, clean, config, extractor).total

    return GradCheckProblem(
        _function, [speckled], list(model.trainable_parameters().values())
    )


@hookimpl
def neighcnn_gradcheck_add_checks(checks: list[GradientCheck]) -> None:
    checks.append(
        GradientCheck(
            "network 6x4 + total loss", _network_problem, tolerance_factor=10.0
        )
    )
