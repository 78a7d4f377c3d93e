"""Simulate multiplicative speckle.

Intensity speckle with ``L`` looks follows a Gamma distribution with shape ``L`` and
scale ``1 / L``, so it has mean one and variance ``1 / L``. A speckled image is the
product of the clean image and the noise, which can be read as the clean image plus a
signal-dependent residual with zero mean.

"""
from __future__ import annotations

import math
from typing import Optional
from typing import Sequence
from typing import Union

import attr
import numpy as np
from _neighcnn.exceptions import ShapeError
from _neighcnn.tensor import Tensor


__all__ = [
    "SpecklePair",
    "apply_speckle",
    "extract_patches",
    "make_rng",
    "sample_gamma_noise",
    "validate_looks",
]


Seed = Union[int, Sequence[int], np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: Seed) -> np.random.Generator:
    """Create a generator from a seed or pass a generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def validate_looks(looks: float) -> float:
    """Validate the number of looks.

    Examples
    --------
    >>> validate_looks(4)
    4
    >>> validate_looks(0)
    Traceback (most recent call last):
    ...
    ValueError: The number of looks must be >= 1, got 0.

    """
    if not math.isfinite(looks) or looks < 1:
        raise ValueError(f"The number of looks must be >= 1, got {looks}.")
    return looks


def _to_array(x: Tensor | np.ndarray) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


@attr.s(frozen=True, eq=False)
class SpecklePair:
    """A clean image, its speckled version and the number of looks of the noise.

    Both images have the shape ``(1, 1, height, width)``.

    """

    clean = attr.ib(type=Tensor)
    speckled = attr.ib(type=Tensor)
    looks = attr.ib(default=None, type=Optional[float])

    @speckled.validator
    def _check_shapes(self, attribute: attr.Attribute, value: Tensor) -> None:
        if value.shape != self.clean.shape:
            raise ShapeError(
                f"Clean and speckled images differ in shape: {self.clean.shape} and "
                f"{value.shape}."
            )

    @property
    def residual(self) -> np.ndarray:
        """numpy.ndarray: The signal-dependent additive noise ``Y - X``."""
        return self.speckled.data - self.clean.data


def sample_gamma_noise(
    shape: Sequence[int], looks: float, seed: Seed = None, dtype: str = "float64"
) -> Tensor:
    """Draw unit-mean Gamma noise with the given number of looks.

    Samples are drawn from a Gamma distribution with shape ``looks`` and scale
    ``1 / looks``, so the result depends only on the seed.

    Parameters
    ----------
    shape : Sequence[int]
        The shape of the noise.
    looks : float
        The number of looks ``L >= 1``.
    seed : Seed
        Anything accepted by :func:`numpy.random.default_rng` or a generator.

    Examples
    --------
    >>> noise = sample_gamma_noise((1, 1, 2, 3), looks=4, seed=0)
    >>> noise.shape
    (1, 1, 2, 3)
    >>> bool((noise.data > 0).all())
    True

    """
    validate_looks(looks)
    shape = tuple(int(extent) for extent in shape)
    if not shape or any(extent < 1 for extent in shape):
        raise ShapeError(f"Noise needs a non-empty shape, got {shape}.")

    samples = make_rng(seed).gamma(looks, 1.0 / looks, size=shape)
    return Tensor(samples.astype(dtype, copy=False))


def apply_speckle(
    clean: Tensor | np.ndarray,
    noise: Tensor | np.ndarray,
    looks: float | None = None,
) -> SpecklePair:
    """Multiply a clean image with noise.

    Examples
    --------
    >>> clean = np.full((1, 1, 2, 2), 0.5)
    >>> pair = apply_speckle(clean, np.ones((1, 1, 2, 2)))
    >>> bool((pair.speckled.data == clean).all())
    True

    """
    clean_data = _to_array(clean)
    noise_data = _to_array(noise)
    if clean_data.shape != noise_data.shape:
        raise ShapeError(
            f"Image and noise differ in shape: {clean_data.shape} and "
            f"{noise_data.shape}."
        )
    if clean_data.size and (clean_data.min() < 0 or clean_data.max() > 1):
        raise ValueError("Clean images must have values in [0, 1].")
    if noise_data.size and noise_data.min() < 0:
        raise ValueError("Speckle noise must be non-negative.")

    return SpecklePair(
        clean=Tensor(np.array(clean_data)),
        speckled=Tensor(clean_data * noise_data),
        looks=looks,
    )


def extract_patches(
    pair: SpecklePair,
    patch_size: int,
    stride: int | None = None,
    seed: Seed = None,
    n_patches: int | None = None,
) -> list[SpecklePair]:
    """Cut aligned patches out of a clean and speckled image.

    Patches are taken on a regular grid in row-major order. With ``n_patches``, a
    subset of the grid positions is drawn with the seed while keeping the row-major
    order.

    Examples
    --------
    >>> image = np.linspace(0, 1, 256 * 256).reshape(1, 1, 256, 256)
    >>> pair = apply_speckle(image, np.ones_like(image))
    >>> len(extract_patches(pair, 64, stride=64))
    16

    """
    stride = patch_size if stride is None else stride
    *_, height, width = pair.clean.shape
    if patch_size < 1 or stride < 1:
        raise ValueError(
            f"Patch size and stride must be positive, got {patch_size} and {stride}."
        )
    if patch_size > min(height, width):
        raise ShapeError(
            f"Patches of size {patch_size} do not fit into an image of size "
            f"{height}x{width}."
        )

    positions = [
        (top, left)
        for top in range(0, height - patch_size + 1, stride)
        for left in range(0, width - patch_size + 1, stride)
    ]
    if n_patches is not None and n_patches < len(positions):
        chosen = make_rng(seed).choice(len(positions), size=n_patches, replace=False)
        positions = [positions[i] for i in sorted(chosen)]

    patches = []
    for top, left in positions:
        window = (..., slice(top, top + patch_size), slice(left, left + patch_size))
        patches.append(
            SpecklePair(
                clean=Tensor(np.array(pair.clean.data[window])),
                speckled=Tensor(np.array(pair.speckled.data[window])),
                looks=pair.looks,
            )
        )
    return patches
