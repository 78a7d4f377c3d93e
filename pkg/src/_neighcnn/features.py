"""Frozen feature extractors for the perceptual loss.

An extractor is a stack of blocks. Every block applies one or more same-padded 3x3
convolutions, each followed by a ReLU, and halves the spatial extent with a 2x2 average
pool. The output of block ``k`` is the feature map ``V_k``, and ``V_0`` is the input
image itself.

Two kinds of extractors exist:

- ``tiny-random`` builds ``n`` blocks with one convolution and ``8 * 2 ** (k - 1)``
  channels in block ``k``, initialized from a seed.
- ``file`` loads the blocks from a checkpoint of kind ``feature-extractor`` with
  tensors named ``block01.conv01.kernel``, ``block01.conv01.bias`` and so on. Kernels
  of a first convolution with three input channels, for example exported from a
  network trained on color images, are summed over the input channels. This is the same
  as feeding the grayscale image replicated into three channels.

The weights are constants and never receive gradients.

"""
from __future__ import annotations

import re
from enum import Enum
from pathlib import Path
from typing import List
from typing import Tuple

import attr
import numpy as np
from _neighcnn import tensor as T
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.checkpoint import save_checkpoint
from _neighcnn.config import hookimpl
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ShapeError
from _neighcnn.gradcheck import GradCheckProblem
from _neighcnn.gradcheck import GradientCheck
from _neighcnn.tensor import Tensor


__all__ = [
    "ExtractorKind",
    "FeatureBlock",
    "FeatureExtractor",
    "build_feature_extractor",
    "extract_features",
    "save_feature_extractor",
]


FEATURE_EXTRACTOR_KIND = "feature-extractor"
_TENSOR_NAME = re.compile(r"^block(\d+)\.conv(\d+)\.(kernel|bias)$")


class ExtractorKind(Enum):
    TINY_RANDOM = "tiny-random"
    FILE = "file"


@attr.s(eq=False)
class FeatureBlock:
    """Convolutions given as pairs of kernel and bias, followed by pooling."""

    convolutions = attr.ib(factory=list, type=List[Tuple[Tensor, Tensor]])

    def __call__(self, x: Tensor) -> Tensor:
        for kernel, bias in self.convolutions:
            x = T.relu(T.conv2d(x, kernel, bias, padding=kernel.shape[-1] // 2))
        return T.avg_pool2d(x, 2)


@attr.s(eq=False)
class FeatureExtractor:
    blocks = attr.ib(factory=list, type=List[FeatureBlock])
    kind = attr.ib(default=ExtractorKind.TINY_RANDOM, type=ExtractorKind)
    source = attr.ib(default="0", type=str)
    """str: The seed of random extractors or the path of loaded ones."""

    @property
    def n(self) -> int:
        return len(self.blocks)

    def astype(self, dtype: str | np.dtype) -> FeatureExtractor:
        """Return a copy with weights of another dtype."""
        blocks = [
            FeatureBlock(
                [
                    (Tensor(kernel.data.astype(dtype)), Tensor(bias.data.astype(dtype)))
                    for kernel, bias in block.convolutions
                ]
            )
            for block in self.blocks
        ]
        return FeatureExtractor(blocks, self.kind, self.source)


def build_feature_extractor(
    kind: ExtractorKind | str = ExtractorKind.TINY_RANDOM,
    n: int = 3,
    seed_or_path: int | str | Path = 0,
) -> FeatureExtractor:
    """Build a frozen feature extractor with ``n`` blocks.

    Examples
    --------
    >>> extractor = build_feature_extractor("tiny-random", n=3, seed_or_path=0)
    >>> image = T.tensor(np.zeros((1, 1, 32, 32)))
    >>> [v.shape for v in extract_features(extractor, image)]
    [(1, 1, 32, 32), (1, 8, 16, 16), (1, 16, 8, 8), (1, 32, 4, 4)]

    """
    kind = ExtractorKind(kind)
    if n < 0:
        raise ValueError(f"The number of blocks must be non-negative, got {n}.")
    if kind == ExtractorKind.TINY_RANDOM:
        return _build_tiny_random(n, int(seed_or_path))
    return _load_extractor(Path(seed_or_path), n)


def _build_tiny_random(n: int, seed: int) -> FeatureExtractor:
    rng = np.random.default_rng(seed)
    blocks = []
    in_channels = 1
    for k in range(1, n + 1):
        out_channels = 8 * 2 ** (k - 1)
        std = np.sqrt(2.0 / (in_channels * 9))
        kernel = rng.standard_normal((out_channels, in_channels, 3, 3)) * std
        bias = np.zeros(out_channels)
        blocks.append(FeatureBlock([(Tensor(kernel), Tensor(bias))]))
        in_channels = out_channels
    return FeatureExtractor(blocks, ExtractorKind.TINY_RANDOM, str(seed))


def _load_extractor(path: Path, n: int) -> FeatureExtractor:
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != FEATURE_EXTRACTOR_KIND:
        raise CheckpointError(
            f"{path} holds a checkpoint of kind {checkpoint.kind!r}, but a "
            f"{FEATURE_EXTRACTOR_KIND!r} is required."
        )

    layout: dict[int, dict[int, dict[str, np.ndarray]]] = {}
    for name, value in checkpoint.tensors.items():
        match = _TENSOR_NAME.match(name)
        if match is None:
            raise CheckpointError(f"Unexpected tensor {name!r} in {path}.")
        block, conv, role = int(match.group(1)), int(match.group(2)), match.group(3)
        layout.setdefault(block, {}).setdefault(conv, {})[role] = value

    if sorted(layout) != list(range(1, len(layout) + 1)):
        raise CheckpointError(f"The blocks in {path} are not numbered 1, 2, ...")
    if n > len(layout):
        raise CheckpointError(f"{path} has {len(layout)} blocks, but {n} are required.")

    blocks = []
    in_channels = 1
    for block_index in range(1, n + 1):
        convolutions = []
        for conv_index in sorted(layout[block_index]):
            tensors = layout[block_index][conv_index]
            name = f"block{block_index:02d}.conv{conv_index:02d}"
            if set(tensors) != {"kernel", "bias"}:
                raise CheckpointError(f"{name} in {path} needs a kernel and a bias.")
            kernel, bias = tensors["kernel"], tensors["bias"]
            if in_channels == 1 and kernel.ndim == 4 and kernel.shape[1] == 3:
                kernel = kernel.sum(axis=1, keepdims=True)
            _validate_convolution(name, kernel, bias, in_channels, path)
            convolutions.append((Tensor(kernel), Tensor(bias)))
            in_channels = kernel.shape[0]
        blocks.append(FeatureBlock(convolutions))

    return FeatureExtractor(blocks, ExtractorKind.FILE, str(path))


def _validate_convolution(
    name: str, kernel: np.ndarray, bias: np.ndarray, in_channels: int, path: Path
) -> None:
    if (
        kernel.ndim != 4
        or kernel.shape[2] != kernel.shape[3]
        or kernel.shape[2] % 2 == 0
    ):
        raise CheckpointError(
            f"{name}.kernel in {path} must have the shape (out, in, k, k) with odd k, "
            f"got {kernel.shape}."
        )
    if kernel.shape[1] != in_channels:
        raise CheckpointError(
            f"{name}.kernel in {path} expects {kernel.shape[1]} input channels, but "
            f"the previous layer yields {in_channels}."
        )
    if bias.shape != (kernel.shape[0],):
        raise CheckpointError(
            f"{name}.bias in {path} must have shape ({kernel.shape[0]},), got "
            f"{bias.shape}."
        )


def save_feature_extractor(extractor: FeatureExtractor, path: Path) -> None:
    """Write the blocks of an extractor into a checkpoint of kind feature-extractor."""
    tensors = {}
    for block_index, block in enumerate(extractor.blocks, start=1):
        for conv_index, (kernel, bias) in enumerate(block.convolutions, start=1):
            name = f"block{block_index:02d}.conv{conv_index:02d}"
            tensors[f"{name}.kernel"] = kernel.data
            tensors[f"{name}.bias"] = bias.data
    save_checkpoint(Checkpoint(FEATURE_EXTRACTOR_KIND, tensors), path)


def extract_features(extractor: FeatureExtractor, image: Tensor) -> list[Tensor]:
    """Compute the feature maps ``V_0, ..., V_n`` of a batch of images."""
    if image.ndim != 4 or image.shape[1] != 1:
        raise ShapeError(
            f"Feature extractors expect images of shape (batch, 1, height, width), got "
            f"{image.shape}."
        )
    factor = 2**extractor.n
    if image.shape[2] % factor or image.shape[3] % factor:
        raise ShapeError(
            f"An extractor with {extractor.n} blocks needs extents divisible by "
            f"{factor}, got {image.shape[2]}x{image.shape[3]}."
        )

    features = [image]
    for block in extractor.blocks:
        features.append(block(features[-1]))
    return features


def _deepest_feature_problem(rng: np.random.Generator) -> GradCheckProblem:
    extractor = build_feature_extractor(n=3, seed_or_path=int(rng.integers(2**31)))
    image = T.tensor(rng.uniform(0, 1, size=(2, 1, 8, 8)))
    weights = T.tensor(rng.uniform(-1, 1, size=(2, 32, 1, 1)))
    return GradCheckProblem(
        lambda x: T.sum(extract_features(extractor, x)[-1] * weights), [image]
    )


@hookimpl
def neighcnn_gradcheck_add_checks(checks: list[GradientCheck]) -> None:
    checks.append(GradientCheck("feature extractor V_3", _deepest_feature_problem))
