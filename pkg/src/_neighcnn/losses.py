"""The training losses.

The total loss is ``euclidean + alpha_n * perceptual + beta_n * neighbourhood``. The
euclidean loss is the mean squared error between prediction and clean image, the
perceptual loss compares feature maps of both images and the neighbourhood loss is a
smoothness term on the prediction which compares pixels with their neighbours to the
south, to the east and on both diagonals. Every component is computed per image and
averaged over the batch.

"""
from __future__ import annotations

from enum import Enum
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import Sequence

import attr
import numpy as np
from _neighcnn import tensor as T
from _neighcnn.config import hookimpl
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import ShapeError
from _neighcnn.features import FeatureExtractor
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import extract_features
from _neighcnn.gradcheck import GradCheckProblem
from _neighcnn.gradcheck import GradientCheck
from _neighcnn.tensor import Tensor


__all__ = [
    "Direction",
    "LossBreakdown",
    "LossComponent",
    "LossConfig",
    "euclidean_loss",
    "neighbourhood_loss",
    "parse_loss_components",
    "perceptual_loss",
    "total_loss",
]


class LossComponent(Enum):
    EUCLIDEAN = "euclidean"
    PERCEPTUAL = "perceptual"
    NEIGHBOURHOOD = "neighbourhood"


_SHORT_NAMES = {
    "eu": LossComponent.EUCLIDEAN,
    "per": LossComponent.PERCEPTUAL,
    "n": LossComponent.NEIGHBOURHOOD,
}


class Direction(Enum):
    """The pixel pairs compared by the neighbourhood loss."""

    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    DIAGONAL = "diagonal"
    ANTI_DIAGONAL = "anti-diagonal"


ALL_DIRECTIONS = tuple(Direction)


def parse_loss_components(
    value: str | Iterable[str | LossComponent],
) -> frozenset[LossComponent]:
    """Parse loss components joined by ``+``, also accepting the short names.

    Examples
    --------
    >>> sorted(c.value for c in parse_loss_components("eu+n"))
    ['euclidean', 'neighbourhood']
    >>> sorted(c.value for c in parse_loss_components(["per", "euclidean+n"]))
    ['euclidean', 'neighbourhood', 'perceptual']

    """
    values = [value] if isinstance(value, (str, LossComponent)) else list(value)

    components = set()
    for item in values:
        if isinstance(item, LossComponent):
            components.add(item)
            continue
        for name in item.split("+"):
            name = name.strip().lower()
            if name in _SHORT_NAMES:
                components.add(_SHORT_NAMES[name])
                continue
            try:
                components.add(LossComponent(name))
            except ValueError:
                raise ConfigurationError(
                    f"Unknown loss component {name!r}. Choose from 'euclidean', "
                    "'perceptual', 'neighbourhood' or the short forms 'eu', 'per' and "
                    "'n'."
                ) from None
    return frozenset(components)


def _coefficient(instance: LossConfig, attribute: attr.Attribute, value: float) -> None:
    if not 0 <= value < 1:
        raise ConfigurationError(
            f"{attribute.name} must be in the interval [0, 1), got {value}."
        )


def _non_empty(
    instance: LossConfig, attribute: attr.Attribute, value: FrozenSet[LossComponent]
) -> None:
    if not value:
        raise ConfigurationError("At least one loss component must be enabled.")


@attr.s(frozen=True)
class LossConfig:
    """The coefficients and components of the total loss."""

    alpha_n = attr.ib(default=1e-4, type=float, converter=float, validator=_coefficient)
    beta_n = attr.ib(default=1e-3, type=float, converter=float, validator=_coefficient)
    n_blocks = attr.ib(default=3, type=int, converter=int)
    enabled = attr.ib(
        factory=lambda: frozenset(LossComponent),
        type=FrozenSet[LossComponent],
        converter=parse_loss_components,
        validator=_non_empty,
    )

    @n_blocks.validator
    def _check_n_blocks(self, attribute: attr.Attribute, value: int) -> None:
        if value < 0:
            raise ConfigurationError(f"n_blocks must be >= 0, got {value}.")

    @property
    def label(self) -> str:
        """str: A short name like ``eu+per+n`` which is used in reports."""
        short = {component: name for name, component in _SHORT_NAMES.items()}
        return "+".join(short[c] for c in LossComponent if c in self.enabled)

    def to_dict(self) -> dict[str, object]:
        return {
            "alpha_n": self.alpha_n,
            "beta_n": self.beta_n,
            "n_blocks": self.n_blocks,
            "enabled": [c.value for c in LossComponent if c in self.enabled],
        }


@attr.s(frozen=True, eq=False)
class LossBreakdown:
    """The total loss and the raw value of every enabled component."""

    total = attr.ib(type=Tensor)
    components = attr.ib(factory=dict, type=Dict[LossComponent, float])


def _check_pair(op: str, predicted: Tensor, clean: Tensor) -> None:
    if predicted.shape != clean.shape:
        raise ShapeError(
            f"The {op} loss needs images of equal shape, got {predicted.shape} and "
            f"{clean.shape}."
        )
    if predicted.ndim != 4:
        raise ShapeError(
            f"The {op} loss expects images of shape (batch, channels, height, width), "
            f"got {predicted.shape}."
        )


def euclidean_loss(predicted: Tensor, clean: Tensor) -> Tensor:
    """Compute the mean squared difference per image, averaged over the batch.

    Examples
    --------
    >>> clean = T.tensor(np.zeros((1, 1, 2, 2)))
    >>> euclidean_loss(T.tensor([[[[0.0, 0.0], [0.0, 1.0]]]]), clean).item()
    0.25

    """
    _check_pair("euclidean", predicted, clean)
    return T.mean(T.square(T.subtract(predicted, clean)))


def _neighbour_differences(x: Tensor, direction: Direction) -> Tensor:
    _, _, height, width = x.shape
    if direction == Direction.VERTICAL:
        return T.crop(x, 0, 0, height - 1, width) - T.crop(x, 1, 0, height - 1, width)
    if direction == Direction.HORIZONTAL:
        return T.crop(x, 0, 0, height, width - 1) - T.crop(x, 0, 1, height, width - 1)
    if direction == Direction.DIAGONAL:
        return T.crop(x, 0, 0, height - 1, width - 1) - T.crop(
            x, 1, 1, height - 1, width - 1
        )
    # The southern neighbour against the eastern one.
    return T.crop(x, 1, 0, height - 1, width - 1) - T.crop(
        x, 0, 1, height - 1, width - 1
    )


def neighbourhood_loss(
    predicted: Tensor, directions: Sequence[Direction] = ALL_DIRECTIONS
) -> Tensor:
    """Sum the root of the summed squared differences of neighbouring pixels.

    Only pairs inside the image are compared. The result is averaged over the batch.
    Restricting ``directions`` to the vertical and horizontal terms yields the total
    variation.

    Examples
    --------
    >>> x = T.tensor([[[[0.0, 1.0], [1.0, 0.0]]]])
    >>> bool(np.isclose(neighbourhood_loss(x).item(), 2 * np.sqrt(2)))
    True

    """
    if predicted.ndim != 4:
        raise ShapeError(
            "The neighbourhood loss expects images of shape (batch, channels, height, "
            f"width), got {predicted.shape}."
        )
    if min(predicted.shape[2:]) < 2:
        raise ShapeError(
            f"The neighbourhood loss needs images of at least 2x2 pixels, got "
            f"{predicted.shape[2]}x{predicted.shape[3]}."
        )
    if not directions:
        raise ValueError("At least one direction is required.")

    per_image = None
    for direction in directions:
        difference = _neighbour_differences(predicted, Direction(direction))
        term = T.sqrt(T.sum(T.square(difference), axes=(1, 2, 3)))
        per_image = term if per_image is None else T.add(per_image, term)
    return T.mean(per_image)


def perceptual_weights(n: int) -> list[float]:
    """Return the weight of every feature map.

    Examples
    --------
    >>> perceptual_weights(3)
    [0.06666666666666667, 0.13333333333333333, 0.26666666666666666, 0.5333333333333333]

    """
    rho = 2 ** (n + 1) - 1
    return [2**k / rho for k in range(n + 1)]


def perceptual_loss(
    predicted: Tensor, clean: Tensor, extractor: FeatureExtractor
) -> Tensor:
    """Compare the feature maps of both images.

    Every feature map contributes its mean squared difference over channels and pixels
    weighted by ``2 ** k / (2 ** (n + 1) - 1)``. With zero blocks, only the images
    themselves are compared and the loss equals the mean squared error.

    """
    _check_pair("perceptual", predicted, clean)
    predicted_features = extract_features(extractor, predicted)
    with T.no_grad():
        clean_features = extract_features(extractor, clean.detach())

    loss = None
    weights = perceptual_weights(extractor.n)
    for weight, vp, vc in zip(weights, predicted_features, clean_features):
        term = T.scalar_mul(T.mean(T.square(T.subtract(vp, vc))), weight)
        loss = term if loss is None else T.add(loss, term)
    return loss


def total_loss(
    predicted: Tensor,
    clean: Tensor,
    config: LossConfig | None = None,
    extractor: FeatureExtractor | None = None,
) -> LossBreakdown:
    """Combine the enabled components with their coefficients.

    Disabled components are not evaluated. The breakdown contains the raw value of
    every evaluated component before the coefficient is applied. Without an extractor,
    a tiny random one with ``config.n_blocks`` blocks is built. A given extractor must
    have exactly ``config.n_blocks`` blocks.

    """
    config = LossConfig() if config is None else config
    _check_pair("total", predicted, clean)

    terms = []
    components = {}
    if LossComponent.EUCLIDEAN in config.enabled:
        value = euclidean_loss(predicted, clean)
        components[LossComponent.EUCLIDEAN] = value.item()
        terms.append(value)
    if LossComponent.PERCEPTUAL in config.enabled:
        if extractor is None:
            extractor = build_feature_extractor(n=config.n_blocks)
        elif extractor.n != config.n_blocks:
            raise ConfigurationError(
                f"The loss uses {config.n_blocks} blocks of features, but the "
                f"extractor has {extractor.n} blocks."
            )
        value = perceptual_loss(predicted, clean, extractor)
        components[LossComponent.PERCEPTUAL] = value.item()
        terms.append(T.scalar_mul(value, config.alpha_n))
    if LossComponent.NEIGHBOURHOOD in config.enabled:
        value = neighbourhood_loss(predicted)
        components[LossComponent.NEIGHBOURHOOD] = value.item()
        terms.append(T.scalar_mul(value, config.beta_n))

    total = terms[0]
    for term in terms[1:]:
        total = T.add(total, term)

    return LossBreakdown(total, components)


def _loss_inputs(
    rng: np.random.Generator, shape: tuple[int, ...] = (2, 1, 8, 8)
) -> tuple[Tensor, Tensor]:
    return (
        T.tensor(rng.uniform(0, 1, size=shape)),
        T.tensor(rng.uniform(0, 1, size=shape)),
    )


def _euclidean_problem(rng: np.random.Generator) -> GradCheckProblem:
    predicted, clean = _loss_inputs(rng)
    return GradCheckProblem(lambda x: euclidean_loss(x, clean), [predicted])


def _neighbourhood_problem(rng: np.random.Generator) -> GradCheckProblem:
    predicted, _ = _loss_inputs(rng, (3, 1, 6, 7))
    return GradCheckProblem(neighbourhood_loss, [predicted])


def _perceptual_problem(rng: np.random.Generator) -> GradCheckProblem:
    predicted, clean = _loss_inputs(rng)
    extractor = build_feature_extractor(n=3, seed_or_path=int(rng.integers(2**31)))
    return GradCheckProblem(lambda x: perceptual_loss(x, clean, extractor), [predicted])


def _total_problem(rng: np.random.Generator) -> GradCheckProblem:
    predicted, clean = _loss_inputs(rng)
    extractor = build_feature_extractor(n=3, seed_or_path=int(rng.integers(2**31)))
    config = LossConfig(alpha_n=0.5, beta_n=0.1)
    return GradCheckProblem(
        lambda x: total_loss(x, clean, config, extractor).total, [predicted]
    )


@hookimpl
def neighcnn_gradcheck_add_checks(checks: list[GradientCheck]) -> None:
    checks.extend(
        [
            GradientCheck("euclidean loss", _euclidean_problem),
            GradientCheck("neighbourhood loss", _neighbourhood_problem),
            GradientCheck("perceptual loss", _perceptual_problem),
            GradientCheck("total loss", _total_problem),
        ]
    )
