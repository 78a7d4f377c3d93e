from __future__ import annotations

from contextlib import ExitStack as does_not_raise  # noqa: N813

import numpy as np
import pytest
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import ShapeError
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import extract_features
from _neighcnn.losses import Direction
from _neighcnn.losses import euclidean_loss
from _neighcnn.losses import LossComponent
from _neighcnn.losses import LossConfig
from _neighcnn.losses import neighbourhood_loss
from _neighcnn.losses import parse_loss_components
from _neighcnn.losses import perceptual_loss
from _neighcnn.losses import perceptual_weights
from _neighcnn.losses import total_loss
from _neighcnn.tensor import tensor


CHECKERBOARD = [[[[0.0, 1.0], [1.0, 0.0]]]]


@pytest.fixture()
def images():
    rng = np.random.default_rng(0)
    return (
        tensor(rng.uniform(0, 1, size=(2, 1, 8, 8))),
        tensor(rng.uniform(0, 1, size=(2, 1, 8, 8))),
    )


@pytest.mark.unit
def test_euclidean_loss_is_averaged_over_the_batch():
    predicted = tensor(np.stack([np.zeros((1, 2, 2)), np.ones((1, 2, 2))]))
    clean = tensor(np.zeros((2, 1, 2, 2)))
    assert euclidean_loss(predicted, clean).item() == pytest.approx(0.5)


@pytest.mark.unit
def test_euclidean_loss_requires_equal_shapes():
    with pytest.raises(ShapeError, match="equal shape"):
        euclidean_loss(tensor(np.ones((1, 1, 2, 2))), tensor(np.ones((1, 1, 3, 2))))


@pytest.mark.unit
@pytest.mark.parametrize(
    "directions, expected",
    [
        (tuple(Direction), 2 * np.sqrt(2)),
        ((Direction.VERTICAL, Direction.HORIZONTAL), 2 * np.sqrt(2)),
        ((Direction.DIAGONAL,), 0.0),
        ((Direction.ANTI_DIAGONAL,), 0.0),
    ],
)
def test_neighbourhood_loss_of_checkerboard(directions, expected):
    loss = neighbourhood_loss(tensor(CHECKERBOARD), directions)
    assert loss.item() == pytest.approx(expected)


@pytest.mark.unit
def test_neighbourhood_loss_compares_diagonal_neighbours():
    # Only the pixel in the lower right corner differs.
    x = tensor([[[[0.0, 0.0], [0.0, 1.0]]]])
    assert neighbourhood_loss(x, (Direction.DIAGONAL,)).item() == pytest.approx(1.0)
    assert neighbourhood_loss(x, (Direction.ANTI_DIAGONAL,)).item() == 0.0
    assert neighbourhood_loss(x).item() == pytest.approx(3.0)


@pytest.mark.unit
def test_neighbourhood_loss_of_constant_image_is_zero():
    assert neighbourhood_loss(tensor(np.full((3, 1, 5, 4), 0.3))).item() == 0.0


@pytest.mark.unit
def test_neighbourhood_loss_gradient_is_finite_for_constant_image():
    x = tensor(np.full((1, 1, 3, 3), 0.5), requires_grad=True)
    neighbourhood_loss(x).backward()
    assert np.all(np.isfinite(x.grad))


@pytest.mark.unit
def test_neighbourhood_loss_is_averaged_over_the_batch():
    x = tensor(np.concatenate([CHECKERBOARD, np.zeros((1, 1, 2, 2))]))
    assert neighbourhood_loss(x).item() == pytest.approx(np.sqrt(2))


@pytest.mark.unit
@pytest.mark.parametrize(
    "shape, expectation",
    [
        ((1, 1, 2, 2), does_not_raise()),
        ((1, 1, 1, 5), pytest.raises(ShapeError, match="2x2")),
        ((1, 5, 5), pytest.raises(ShapeError, match="batch")),
    ],
)
def test_neighbourhood_loss_shapes(shape, expectation):
    with expectation:
        neighbourhood_loss(tensor(np.zeros(shape)))


@pytest.mark.unit
@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_perceptual_weights_sum_to_one_and_double(n):
    weights = perceptual_weights(n)
    assert len(weights) == n + 1
    assert sum(weights) == pytest.approx(1.0)
    assert all(b == pytest.approx(2 * a) for a, b in zip(weights, weights[1:]))


@pytest.mark.unit
def test_perceptual_loss_without_blocks_equals_euclidean_loss(images):
    predicted, clean = images
    extractor = build_feature_extractor(n=0)
    assert perceptual_loss(predicted, clean, extractor).item() == pytest.approx(
        euclidean_loss(predicted, clean).item()
    )


@pytest.mark.unit
def test_perceptual_loss_is_zero_for_identical_images(images):
    predicted, _ = images
    extractor = build_feature_extractor(n=3)
    assert perceptual_loss(predicted, predicted, extractor).item() == 0.0


@pytest.mark.unit
def test_perceptual_loss_does_not_differentiate_the_clean_image(images):
    predicted, clean = images
    predicted = tensor(predicted.data, requires_grad=True)
    clean = tensor(clean.data, requires_grad=True)

    perceptual_loss(predicted, clean, build_feature_extractor(n=2)).backward()

    assert predicted.grad is not None
    assert clean.grad is None


@pytest.mark.unit
def test_total_loss_combines_components(images):
    predicted, clean = images
    extractor = build_feature_extractor(n=3, seed_or_path=1)
    config = LossConfig(alpha_n=0.5, beta_n=0.25)

    breakdown = total_loss(predicted, clean, config, extractor)

    eu = euclidean_loss(predicted, clean).item()
    per = perceptual_loss(predicted, clean, extractor).item()
    n = neighbourhood_loss(predicted).item()
    assert breakdown.components == {
        LossComponent.EUCLIDEAN: pytest.approx(eu),
        LossComponent.PERCEPTUAL: pytest.approx(per),
        LossComponent.NEIGHBOURHOOD: pytest.approx(n),
    }
    assert breakdown.total.item() == pytest.approx(eu + 0.5 * per + 0.25 * n)


@pytest.mark.unit
@pytest.mark.parametrize(
    "enabled",
    ["eu", "per", "n", "eu+n", "per+n", "eu+per", "eu+per+n"],
)
def test_total_loss_evaluates_only_enabled_components(images, enabled):
    predicted, clean = images
    config = LossConfig(enabled=enabled)

    breakdown = total_loss(predicted, clean, config, build_feature_extractor(n=3))

    assert set(breakdown.components) == config.enabled
    assert config.label == enabled


@pytest.mark.unit
def test_total_loss_with_only_euclidean_component(images):
    predicted, clean = images
    breakdown = total_loss(predicted, clean, LossConfig(enabled="euclidean"))
    assert breakdown.total.item() == euclidean_loss(predicted, clean).item()


@pytest.mark.unit
@pytest.mark.parametrize(
    "value, expected",
    [
        ("eu", {LossComponent.EUCLIDEAN}),
        ("N+Per", {LossComponent.NEIGHBOURHOOD, LossComponent.PERCEPTUAL}),
        (["euclidean", "n"], {LossComponent.EUCLIDEAN, LossComponent.NEIGHBOURHOOD}),
        (LossComponent.PERCEPTUAL, {LossComponent.PERCEPTUAL}),
    ],
)
def test_parse_loss_components(value, expected):
    assert parse_loss_components(value) == expected


@pytest.mark.unit
def test_parse_unknown_loss_component():
    with pytest.raises(ConfigurationError, match="Unknown loss component 'mse'"):
        parse_loss_components("eu+mse")


@pytest.mark.unit
@pytest.mark.parametrize(
    "kwargs, expectation",
    [
        ({}, does_not_raise()),
        ({"alpha_n": 0, "beta_n": 0}, does_not_raise()),
        ({"alpha_n": 1}, pytest.raises(ConfigurationError, match="alpha_n")),
        ({"beta_n": -0.1}, pytest.raises(ConfigurationError, match="beta_n")),
        ({"n_blocks": -1}, pytest.raises(ConfigurationError, match="n_blocks")),
        ({"enabled": []}, pytest.raises(ConfigurationError, match="At least one")),
    ],
)
def test_loss_config_validation(kwargs, expectation):
    with expectation:
        LossConfig(**kwargs)


@pytest.mark.unit
def test_loss_config_defaults():
    config = LossConfig()
    assert config.label == "eu+per+n"
    assert config.to_dict() == {
        "alpha_n": 1e-4,
        "beta_n": 1e-3,
        "n_blocks": 3,
        "enabled": ["euclidean", "perceptual", "neighbourhood"],
    }


@pytest.mark.unit
@pytest.mark.parametrize(
    "n_blocks, expectation",
    [
        (3, does_not_raise()),
        (2, pytest.raises(ConfigurationError, match="2 blocks of features")),
        (0, pytest.raises(ConfigurationError, match="extractor has 3 blocks")),
    ],
)
def test_total_loss_requires_an_extractor_with_n_blocks(images, n_blocks, expectation):
    predicted, clean = images
    extractor = build_feature_extractor(n=3)
    with expectation:
        total_loss(predicted, clean, LossConfig(n_blocks=n_blocks), extractor)


@pytest.mark.unit
def test_total_loss_ignores_the_extractor_without_perceptual_component(images):
    predicted, clean = images
    config = LossConfig(n_blocks=1, enabled="eu+n")
    breakdown = total_loss(predicted, clean, config, build_feature_extractor(n=3))
    assert set(breakdown.components) == config.enabled


def _euclidean_oracle(predicted, clean):
    batch, channels, height, width = predicted.shape
    total = 0.0
    for b in range(batch):
        for c in range(channels):
            for i in range(height):
                for j in range(width):
                    total += (predicted[b, c, i, j] - clean[b, c, i, j]) ** 2
    return total / predicted.size


def _neighbourhood_oracle(x):
    batch, _, height, width = x.shape
    total = 0.0
    for b in range(batch):
        image = x[b, 0]
        vertical = horizontal = diagonal = anti_diagonal = 0.0
        for i in range(height - 1):
            for j in range(width):
                vertical += (image[i, j] - image[i + 1, j]) ** 2
        for i in range(height):
            for j in range(width - 1):
                horizontal += (image[i, j] - image[i, j + 1]) ** 2
        for i in range(height - 1):
            for j in range(width - 1):
                diagonal += (image[i, j] - image[i + 1, j + 1]) ** 2
                anti_diagonal += (image[i + 1, j] - image[i, j + 1]) ** 2
        total += sum(
            np.sqrt(value) for value in (vertical, horizontal, diagonal, anti_diagonal)
        )
    return total / batch


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("shape", [(1, 1, 2, 2), (2, 1, 5, 7), (3, 1, 16, 16)])
def test_losses_agree_with_explicit_loops(seed, shape):
    rng = np.random.default_rng(seed)
    predicted = rng.uniform(0, 1, size=shape)
    clean = rng.uniform(0, 1, size=shape)

    euclidean = euclidean_loss(tensor(predicted), tensor(clean)).item()
    neighbourhood = neighbourhood_loss(tensor(predicted)).item()

    assert euclidean == pytest.approx(_euclidean_oracle(predicted, clean), rel=1e-12)
    assert neighbourhood == pytest.approx(_neighbourhood_oracle(predicted), rel=1e-12)


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [0, 1, 3])
def test_perceptual_loss_agrees_with_weighted_feature_errors(seed, n):
    rng = np.random.default_rng(seed)
    predicted = tensor(rng.uniform(0, 1, size=(2, 1, 16, 16)))
    clean = tensor(rng.uniform(0, 1, size=(2, 1, 16, 16)))
    extractor = build_feature_extractor(n=n, seed_or_path=seed)

    expected = 0.0
    rho = 2 ** (n + 1) - 1
    pairs = zip(
        extract_features(extractor, predicted), extract_features(extractor, clean)
    )
    for k, (vp, vc) in enumerate(pairs):
        expected += 2**k * _euclidean_oracle(vp.data, vc.data) / rho

    result = perceptual_loss(predicted, clean, extractor).item()
    assert result == pytest.approx(expected, rel=1e-12)


@pytest.mark.unit
@pytest.mark.parametrize("offset", [-0.5, 0.25, 3.0])
def test_neighbourhood_loss_ignores_constant_offsets(offset):
    x = np.random.default_rng(0).uniform(0, 1, size=(2, 1, 9, 6))
    shifted = neighbourhood_loss(tensor(x + offset)).item()
    assert shifted == pytest.approx(neighbourhood_loss(tensor(x)).item(), rel=1e-12)


@pytest.mark.unit
@pytest.mark.parametrize("factor", [-2.0, 0.5, 3.0])
def test_neighbourhood_loss_scales_with_the_absolute_factor(factor):
    x = np.random.default_rng(1).uniform(0, 1, size=(2, 1, 9, 6))
    scaled = neighbourhood_loss(tensor(factor * x)).item()
    expected = abs(factor) * neighbourhood_loss(tensor(x)).item()
    assert scaled == pytest.approx(expected, rel=1e-12)
