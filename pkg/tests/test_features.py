from __future__ import annotations

import numpy as np
import pytest
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.checkpoint import save_checkpoint
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ShapeError
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import ExtractorKind
from _neighcnn.features import extract_features
from _neighcnn.features import save_feature_extractor
from _neighcnn.tensor import tensor


@pytest.fixture()
def image():
    return tensor(np.random.default_rng(0).uniform(0, 1, size=(2, 1, 16, 16)))


@pytest.mark.unit
@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_tiny_random_extractor_shapes(image, n):
    features = extract_features(build_feature_extractor(n=n), image)

    assert len(features) == n + 1
    assert features[0] is image
    for k, feature in enumerate(features[1:], start=1):
        assert feature.shape == (2, 8 * 2 ** (k - 1), 16 // 2**k, 16 // 2**k)


@pytest.mark.unit
def test_tiny_random_extractor_depends_only_on_the_seed(image):
    first = extract_features(build_feature_extractor(seed_or_path=4), image)[-1]
    second = extract_features(build_feature_extractor(seed_or_path=4), image)[-1]
    other = extract_features(build_feature_extractor(seed_or_path=5), image)[-1]

    assert np.array_equal(first.data, second.data)
    assert not np.array_equal(first.data, other.data)


@pytest.mark.unit
def test_weights_of_the_extractor_are_constants(image):
    extractor = build_feature_extractor(n=2)
    x = tensor(image.data, requires_grad=True)

    features = extract_features(extractor, x)

    assert features[-1].requires_grad
    kernel, _ = extractor.blocks[0].convolutions[0]
    assert not kernel.requires_grad


@pytest.mark.unit
@pytest.mark.parametrize(
    "shape, match",
    [((1, 1, 12, 16), "divisible by 8"), ((1, 3, 16, 16), "batch, 1")],
)
def test_extract_features_raises_for_invalid_images(shape, match):
    with pytest.raises(ShapeError, match=match):
        extract_features(build_feature_extractor(n=3), tensor(np.zeros(shape)))


@pytest.mark.unit
def test_negative_number_of_blocks():
    with pytest.raises(ValueError, match="non-negative"):
        build_feature_extractor(n=-1)


@pytest.mark.unit
def test_saved_extractor_is_loaded_with_same_features(tmp_path, image):
    extractor = build_feature_extractor(n=3, seed_or_path=2)
    path = tmp_path / "extractor.ncnn"
    save_feature_extractor(extractor, path)

    loaded = build_feature_extractor("file", n=2, seed_or_path=path)

    assert loaded.kind == ExtractorKind.FILE
    assert loaded.n == 2
    expected = extract_features(extractor, image)[2]
    assert np.array_equal(extract_features(loaded, image)[2].data, expected.data)


@pytest.mark.unit
def test_color_kernels_are_summed_over_input_channels(tmp_path, image):
    rng = np.random.default_rng(0)
    kernel = rng.normal(size=(4, 3, 3, 3))
    path = tmp_path / "extractor.ncnn"
    save_checkpoint(
        Checkpoint(
            "feature-extractor",
            {"block01.conv01.kernel": kernel, "block01.conv01.bias": np.zeros(4)},
        ),
        path,
    )

    loaded = build_feature_extractor("file", n=1, seed_or_path=path)

    loaded_kernel, _ = loaded.blocks[0].convolutions[0]
    assert np.allclose(loaded_kernel.data, kernel.sum(axis=1, keepdims=True))


@pytest.mark.unit
@pytest.mark.parametrize(
    "kind, tensors, n, match",
    [
        ("model", {}, 1, "kind 'model'"),
        ("feature-extractor", {"weights": np.zeros(1)}, 1, "Unexpected tensor"),
        (
            "feature-extractor",
            {"block02.conv01.kernel": np.zeros((1, 1, 3, 3))},
            1,
            "not numbered",
        ),
        (
            "feature-extractor",
            {"block01.conv01.kernel": np.zeros((2, 1, 3, 3))},
            1,
            "needs a kernel and a bias",
        ),
        (
            "feature-extractor",
            {
                "block01.conv01.kernel": np.zeros((2, 1, 3, 3)),
                "block01.conv01.bias": np.zeros(2),
            },
            2,
            "1 blocks, but 2",
        ),
        (
            "feature-extractor",
            {
                "block01.conv01.kernel": np.zeros((2, 1, 2, 2)),
                "block01.conv01.bias": np.zeros(2),
            },
            1,
            "odd k",
        ),
        (
            "feature-extractor",
            {
                "block01.conv01.kernel": np.zeros((2, 2, 3, 3)),
                "block01.conv01.bias": np.zeros(2),
            },
            1,
            "input channels",
        ),
    ],
)
def test_load_invalid_extractors(tmp_path, kind, tensors, n, match):
    path = tmp_path / "extractor.ncnn"
    save_checkpoint(Checkpoint(kind, tensors), path)

    with pytest.raises(CheckpointError, match=match):
        build_feature_extractor("file", n=n, seed_or_path=path)
