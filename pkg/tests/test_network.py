from __future__ import annotations

import numpy as np
import pytest
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import ShapeError
from _neighcnn.network import build_model
from _neighcnn.network import despeckle_image
from _neighcnn.network import forward
from _neighcnn.network import model_from_checkpoint
from _neighcnn.network import model_to_checkpoint
from _neighcnn.network import NeighCNNConfig
from _neighcnn.tensor import Mode
from _neighcnn.tensor import tensor


@pytest.mark.unit
@pytest.mark.parametrize(
    "depth, filters, kernel_size, expected",
    [
        (12, 64, 3, 371_777),
        (2, 4, 3, 1 * 4 * 9 + 4 + 4 * 1 * 9 + 1),
        (3, 2, 1, 2 + 2 + 4 + 2 + 2 + 2 + 2 + 1),
    ],
)
def test_number_of_trainable_parameters(depth, filters, kernel_size, expected):
    model = build_model(NeighCNNConfig(depth, filters, kernel_size))
    assert model.n_trainable == expected


@pytest.mark.unit
@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"depth": 1}, "depth"),
        ({"filters": 0}, "filters"),
        ({"kernel_size": 2}, "odd"),
        ({"kernel_size": -1}, "odd"),
    ],
)
def test_invalid_configuration(kwargs, match):
    with pytest.raises(ConfigurationError, match=match):
        NeighCNNConfig(**kwargs)


@pytest.mark.unit
def test_layer_structure():
    model = build_model(NeighCNNConfig(depth=4, filters=3))

    assert [layer.batch_norm is not None for layer in model.layers] == [
        False,
        True,
        True,
        False,
    ]
    assert [layer.activation for layer in model.layers] == [True, True, True, False]
    assert "bn02.running_var" in model.parameters()
    assert "bn02.running_var" not in model.trainable_parameters()


@pytest.mark.unit
def test_initialization_depends_only_on_the_seed():
    config = NeighCNNConfig(depth=3, filters=4)
    first = build_model(config, seed=1).state_dict()
    second = build_model(config, seed=1).state_dict()
    third = build_model(config, seed=2).state_dict()

    assert all(np.array_equal(first[name], second[name]) for name in first)
    assert not np.array_equal(first["conv01.kernel"], third["conv01.kernel"])
    assert np.array_equal(first["conv01.bias"], np.zeros(4))


@pytest.mark.unit
def test_forward_subtracts_the_residual():
    model = build_model(NeighCNNConfig(depth=3, filters=4))
    speckled = tensor(np.random.default_rng(0).uniform(0, 2, size=(2, 1, 6, 6)))

    result = forward(model, speckled, Mode.INFER)

    assert result.residual.shape == speckled.shape
    assert np.allclose(result.despeckled.data, speckled.data - result.residual.data)
    assert result.clamped.data.min() >= 0
    assert result.clamped.data.max() <= 1


@pytest.mark.unit
def test_forward_in_train_mode_is_not_clamped():
    model = build_model(NeighCNNConfig(depth=3, filters=4))
    result = forward(model, tensor(np.ones((2, 1, 4, 4))), "train")
    assert result.clamped is None


@pytest.mark.unit
@pytest.mark.parametrize(
    "shape, match",
    [
        ((1, 2, 4, 4), "batch, 1, height, width"),
        ((1, 4, 4), "batch, 1, height, width"),
        ((1, 1, 2, 4), "smaller than the kernel size"),
    ],
)
def test_forward_raises_for_invalid_shapes(shape, match):
    model = build_model(NeighCNNConfig(depth=2, filters=2))
    with pytest.raises(ShapeError, match=match):
        forward(model, tensor(np.ones(shape)), Mode.INFER)


@pytest.mark.unit
def test_infer_mode_is_deterministic_and_does_not_touch_statistics():
    model = build_model(NeighCNNConfig(depth=3, filters=4))
    image = np.random.default_rng(0).uniform(0, 1, size=(8, 8))
    before = model.state_dict()

    first, _ = despeckle_image(model, image)
    second, _ = despeckle_image(model, image)

    assert np.array_equal(first, second)
    after = model.state_dict()
    assert all(np.array_equal(before[name], after[name]) for name in before)


@pytest.mark.unit
def test_train_mode_updates_running_statistics():
    model = build_model(NeighCNNConfig(depth=3, filters=4))
    forward(model, tensor(np.random.default_rng(0).uniform(size=(2, 1, 4, 4))))
    assert not np.array_equal(
        model.parameters()["bn02.running_mean"].value, np.zeros(4)
    )


@pytest.mark.unit
def test_despeckle_image_requires_two_dimensions():
    model = build_model(NeighCNNConfig(depth=2, filters=2))
    with pytest.raises(ShapeError, match="two-dimensional"):
        despeckle_image(model, np.ones((1, 4, 4)))


@pytest.mark.unit
@pytest.mark.parametrize("dtype", ["float32", "float64"])
def test_model_checkpoint_round_trip_keeps_outputs(dtype):
    model = build_model(NeighCNNConfig(depth=3, filters=4), seed=3).astype(dtype)
    image = np.random.default_rng(0).uniform(0, 1, size=(6, 6))

    restored = model_from_checkpoint(model_to_checkpoint(model))

    assert restored.config == model.config
    assert restored.dtype == np.dtype(dtype)
    expected, _ = despeckle_image(model, image)
    result, _ = despeckle_image(restored, image)
    assert np.array_equal(result, expected)


@pytest.mark.unit
def test_model_from_checkpoint_of_another_kind():
    with pytest.raises(CheckpointError, match="'feature-extractor'"):
        model_from_checkpoint(Checkpoint("feature-extractor"))


@pytest.mark.unit
def test_model_from_checkpoint_with_mismatching_tensors():
    model = build_model(NeighCNNConfig(depth=3, filters=4))
    checkpoint = model_to_checkpoint(model)
    checkpoint.model_config["filters"] = 5

    with pytest.raises(CheckpointError, match="shape"):
        model_from_checkpoint(checkpoint)


@pytest.mark.unit
def test_model_from_checkpoint_with_missing_tensors():
    checkpoint = model_to_checkpoint(build_model(NeighCNNConfig(depth=3, filters=4)))
    del checkpoint.tensors["conv03.bias"]

    with pytest.raises(CheckpointError, match="Missing"):
        model_from_checkpoint(checkpoint)
