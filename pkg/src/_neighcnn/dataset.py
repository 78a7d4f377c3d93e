"""Generate and read datasets of clean and speckled image pairs.

A dataset directory contains

- ``manifest.csv`` with the columns ``clean_path,speckled_path,look,seed,split``,
- ``dataset.toml`` with the generator seed, the image size and the requested counts,
- ``clean/`` with the clean images cropped to the image size,
- ``speckled/`` with one float raster per pair, and
- ``preview/`` with an 8-bit preview of every speckled image.

Paths in the manifest are relative to the manifest.

"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import attr
import numpy as np
import tomli
import tomli_w
from _neighcnn.exceptions import DataError
from _neighcnn.raster import is_image_file
from _neighcnn.raster import read_image
from _neighcnn.raster import RASTER_SUFFIX
from _neighcnn.raster import write_image
from _neighcnn.raster import write_raster
from _neighcnn.shared import find_duplicates
from _neighcnn.shared import get_number_of_threads
from _neighcnn.speckle import apply_speckle
from _neighcnn.speckle import sample_gamma_noise
from _neighcnn.speckle import SpecklePair
from _neighcnn.tensor import Tensor


__all__ = [
    "DatasetManifest",
    "DatasetPreset",
    "ManifestEntry",
    "PRESETS",
    "Split",
    "default_validation_pairs",
    "generate_dataset",
    "read_manifest",
    "regenerate_speckled",
    "write_manifest",
]


MANIFEST_NAME = "manifest.csv"
METADATA_NAME = "dataset.toml"
MANIFEST_COLUMNS = ["clean_path", "speckled_path", "look", "seed", "split"]


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@attr.s(frozen=True)
class ManifestEntry:
    """A pair of a clean and a speckled image.

    Paths are relative to the directory of the manifest and use forward slashes.

    """

    clean_path = attr.ib(type=str)
    speckled_path = attr.ib(type=str)
    look = attr.ib(type=int)
    seed = attr.ib(type=int)
    split = attr.ib(type=Split, converter=Split)


@attr.s
class DatasetManifest:
    """The index of a dataset."""

    entries = attr.ib(factory=list, type=List[ManifestEntry])
    root = attr.ib(default=Path("."), type=Path, converter=Path)
    """pathlib.Path: The directory against which entry paths are resolved."""
    seed = attr.ib(default=None, type=Optional[int])
    image_size = attr.ib(default=None, type=Optional[int])

    @property
    def looks(self) -> list[int]:
        return sorted({entry.look for entry in self.entries})

    def select(
        self, looks: Iterable[int] | None = None, split: Split | str | None = None
    ) -> list[ManifestEntry]:
        """Select entries by looks and split while keeping the manifest order."""
        looks = None if looks is None else set(looks)
        split = None if split is None else Split(split)
        return [
            entry
            for entry in self.entries
            if (looks is None or entry.look in looks)
            and (split is None or entry.split == split)
        ]

    def counts(self) -> dict[tuple[int, Split], int]:
        """Count the pairs per look and split."""
        counts: Dict[Tuple[int, Split], int] = {}
        for entry in self.entries:
            key = (entry.look, entry.split)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def resolve(self, relative_path: str) -> Path:
        return self.root.joinpath(relative_path)

    def load_pair(self, entry: ManifestEntry) -> SpecklePair:
        """Load the clean and speckled image of an entry as a pair."""
        clean = read_image(self.resolve(entry.clean_path))
        speckled = read_image(self.resolve(entry.speckled_path))
        if clean.shape != speckled.shape:
            raise DataError(
                f"The images of {entry.speckled_path} differ in shape: {clean.shape} "
                f"and {speckled.shape}."
            )
        return SpecklePair(
            clean=Tensor(clean[None, None]),
            speckled=Tensor(speckled[None, None]),
            looks=entry.look,
        )


@attr.s(frozen=True)
class DatasetPreset:
    looks = attr.ib(type=Tuple[int, ...], converter=tuple)
    image_size = attr.ib(type=int)
    train_pairs = attr.ib(type=int)
    validation_pairs = attr.ib(type=int)
    test_pairs = attr.ib(type=int)


def default_validation_pairs(train_pairs: int) -> int:
    """Hold out a tenth of the training pairs for validation, rounded half up.

    Examples
    --------
    >>> default_validation_pairs(229)
    23
    >>> default_validation_pairs(3)
    1
    >>> default_validation_pairs(0)
    0

    """
    if train_pairs <= 0:
        return 0
    return max(1, math.floor(0.1 * train_pairs + 0.5))


# Twelve looks at full scale, 2 to 8 and 10 to 30 in steps of five.
PRESETS: dict[str, DatasetPreset] = {
    "paper": DatasetPreset(
        looks=(2, 3, 4, 5, 6, 7, 8, 10, 15, 20, 25, 30),
        image_size=256,
        train_pairs=229,
        validation_pairs=default_validation_pairs(229),
        test_pairs=80,
    ),
    "desk": DatasetPreset(
        looks=(1, 2, 4, 8),
        image_size=64,
        train_pairs=50,
        validation_pairs=5,
        test_pairs=10,
    ),
}
PRESETS["full"] = PRESETS["paper"]


def generate_dataset(
    clean_dir: Path,
    out_dir: Path,
    looks: Sequence[int],
    train_pairs: int,
    validation_pairs: int | None = None,
    test_pairs: int = 0,
    image_size: int = 256,
    seed: int = 0,
    n_threads: int | None = None,
) -> DatasetManifest:
    """Generate speckled images from a directory of clean images.

    Every input is validated and every clean image is read before anything is
    written, so that invalid requests leave no partial output behind.

    Parameters
    ----------
    clean_dir : pathlib.Path
        Directory with 8-bit grayscale PNG or PGM images.
    out_dir : pathlib.Path
        The dataset directory.
    looks : Sequence[int]
        The numbers of looks. Every look receives the same number of pairs per split.
    train_pairs, validation_pairs, test_pairs : int
        Pairs per look and split. By default, a tenth of the training pairs is
        generated for validation.
    image_size : int
        Clean images are center-cropped to squares of this size.
    seed : int
        Determines the assignment of clean images to splits and the noise of every
        pair.
    n_threads : int, optional
        Number of threads generating pairs. Defaults to ``NEIGHCNN_THREADS``.

    """
    clean_dir = Path(clean_dir)
    out_dir = Path(out_dir)
    looks = _validate_looks_list(looks)
    if validation_pairs is None:
        validation_pairs = default_validation_pairs(train_pairs)
    counts = {
        Split.TRAIN: train_pairs,
        Split.VALIDATION: validation_pairs,
        Split.TEST: test_pairs,
    }
    if any(count < 0 for count in counts.values()) or not sum(counts.values()):
        raise ValueError(
            f"Pair counts must be non-negative and not all zero: {counts}."
        )
    if image_size < 1:
        raise ValueError(f"The image size must be positive, got {image_size}.")
    if seed < 0:
        raise ValueError(f"The seed must be non-negative, got {seed}.")

    if not clean_dir.is_dir():
        raise DataError(f"The directory of clean images {clean_dir} does not exist.")
    paths = sorted(
        (path for path in clean_dir.iterdir() if is_image_file(path)),
        key=lambda path: path.name,
    )
    duplicated_stems = find_duplicates(path.stem for path in paths)
    if duplicated_stems:
        raise DataError(
            f"Clean images must have unique names, found {sorted(duplicated_stems)}."
        )

    rng = np.random.default_rng(seed)
    paths = [paths[i] for i in rng.permutation(len(paths))]
    pools = _partition_pools(paths, counts)
    clean_images = {
        path.stem: _center_crop(read_image(path), image_size, path)
        for pool in pools.values()
        for path in pool
    }

    entries = _create_entries(looks, counts, pools, seed)

    try:
        for subdirectory in ("clean", "speckled", "preview"):
            out_dir.joinpath(subdirectory).mkdir(parents=True, exist_ok=True)
        for look in looks:
            out_dir.joinpath("speckled", f"L{look:02d}").mkdir(exist_ok=True)
            out_dir.joinpath("preview", f"L{look:02d}").mkdir(exist_ok=True)
        for stem, image in clean_images.items():
            write_image(out_dir.joinpath("clean", f"{stem}.png"), image)
    except OSError as e:
        raise DataError(
            f"Could not write to the output directory {out_dir}: {e}"
        ) from e

    def _generate(entry: ManifestEntry) -> None:
        clean = clean_images[Path(entry.clean_path).stem]
        speckled = _speckle(clean, entry)
        speckled_path = out_dir.joinpath(entry.speckled_path)
        write_raster(speckled_path, speckled)
        preview_path = out_dir.joinpath("preview", *Path(entry.speckled_path).parts[1:])
        write_image(preview_path.with_suffix(".png"), speckled)

    n_threads = get_number_of_threads() if n_threads is None else n_threads
    with ThreadPoolExecutor(max_workers=n_threads) as executor:
        list(executor.map(_generate, entries))

    manifest = DatasetManifest(entries, out_dir, seed, image_size)
    write_manifest(manifest, out_dir / MANIFEST_NAME)
    _write_metadata(out_dir / METADATA_NAME, manifest, looks, counts)
    return manifest


def _validate_looks_list(looks: Sequence[int]) -> list[int]:
    looks = list(looks)
    if not looks:
        raise ValueError("At least one number of looks is required.")
    for look in looks:
        if isinstance(look, bool) or int(look) != look or look < 1:
            raise ValueError(f"Looks must be whole numbers >= 1, got {look!r}.")
    duplicated = find_duplicates(looks)
    if duplicated:
        raise ValueError(f"Looks must be unique, found {sorted(duplicated)} twice.")
    return sorted(int(look) for look in looks)


def _partition_pools(
    paths: list[Path], counts: dict[Split, int]
) -> dict[Split, list[Path]]:
    """Partition clean images into disjoint pools proportional to the pair counts."""
    requested = [split for split in Split if counts[split] > 0]
    if len(paths) < len(requested):
        raise DataError(
            f"Found {len(paths)} clean images, but at least {len(requested)} are "
            "needed to give every split its own images."
        )
    total = sum(counts.values())
    sizes = {
        split: max(1, math.floor(len(paths) * counts[split] / total))
        for split in requested[1:]
    }
    sizes[requested[0]] = len(paths) - sum(sizes.values())
    if sizes[requested[0]] < 1:
        raise DataError(
            f"Found {len(paths)} clean images which is not enough to give every split "
            "its own images."
        )

    pools: Dict[Split, List[Path]] = {}
    start = 0
    for split in requested:
        pools[split] = paths[start : start + sizes[split]]
        start += sizes[split]
    return pools


def _center_crop(image: np.ndarray, size: int, path: Path) -> np.ndarray:
    height, width = image.shape
    if height < size or width < size:
        raise DataError(
            f"The clean image {path} has size {height}x{width} which is smaller than "
            f"the requested image size {size}."
        )
    top = (height - size) // 2
    left = (width - size) // 2
    return image[top : top + size, left : left + size]


def _create_entries(
    looks: list[int],
    counts: dict[Split, int],
    pools: dict[Split, list[Path]],
    seed: int,
) -> list[ManifestEntry]:
    """Create the entries of the manifest with one seed per entry.

    Within a look, pairs cycle through the pool of their split. Every look starts at a
    different offset so that larger pools give different looks different images.

    """
    n_entries = len(looks) * sum(counts.values())
    seeds = np.random.SeedSequence(seed).generate_state(n_entries, dtype=np.uint64)
    if len(set(seeds.tolist())) != n_entries:
        raise DataError("The per-pair seeds are not unique. Use a different seed.")

    entries = []
    seed_iterator = iter(seeds.tolist())
    for look_index, look in enumerate(looks):
        for split in Split:
            pool = pools.get(split, [])
            for i in range(counts[split]):
                path = pool[(look_index * counts[split] + i) % len(pool)]
                entries.append(
                    ManifestEntry(
                        clean_path=f"clean/{path.stem}.png",
                        speckled_path=(
                            f"speckled/L{look:02d}/{split.value}_{i:04d}{RASTER_SUFFIX}"
                        ),
                        look=look,
                        seed=next(seed_iterator),
                        split=split,
                    )
                )
    return entries


def _speckle(clean: np.ndarray, entry: ManifestEntry) -> np.ndarray:
    noise = sample_gamma_noise(clean.shape, entry.look, seed=entry.seed)
    pair = apply_speckle(clean, noise, entry.look)
    return pair.speckled.data.astype(np.float32)


def regenerate_speckled(manifest: DatasetManifest, entry: ManifestEntry) -> np.ndarray:
    """Recompute the speckled image of an entry from its clean image and seed."""
    clean = read_image(manifest.resolve(entry.clean_path))
    return _speckle(clean, entry)


def write_manifest(manifest: DatasetManifest, path: Path) -> None:
    """Write the entries of a manifest to a CSV file."""
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for entry in manifest.entries:
            writer.writerow(
                [
                    entry.clean_path,
                    entry.speckled_path,
                    entry.look,
                    entry.seed,
                    entry.split.value,
                ]
            )


def _write_metadata(
    path: Path,
    manifest: DatasetManifest,
    looks: list[int],
    counts: dict[Split, int],
) -> None:
    metadata = {
        "seed": manifest.seed,
        "image_size": manifest.image_size,
        "looks": looks,
        "pairs": {split.value: count for split, count in counts.items()},
    }
    Path(path).write_text(tomli_w.dumps(metadata), encoding="utf-8")


def read_manifest(path: Path) -> DatasetManifest:
    """Read a manifest and check that every referenced image exists.

    ``path`` can be the CSV file or the dataset directory.

    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise DataError(f"The manifest {path} does not exist.")

    root = path.parent
    entries = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != MANIFEST_COLUMNS:
            raise DataError(
                f"The manifest {path} must have the header "
                f"{','.join(MANIFEST_COLUMNS)}."
            )
        for line_number, row in enumerate(reader, start=2):
            entries.append(_parse_row(row, path, line_number))

    for entry in entries:
        for relative_path in (entry.clean_path, entry.speckled_path):
            if not root.joinpath(relative_path).is_file():
                raise DataError(
                    f"The image {relative_path} referenced in {path} does not exist."
                )

    metadata = _read_metadata(root / METADATA_NAME)
    return DatasetManifest(
        entries, root, metadata.get("seed"), metadata.get("image_size")
    )


def _parse_row(row: list[str], path: Path, line_number: int) -> ManifestEntry:
    if len(row) != len(MANIFEST_COLUMNS):
        raise DataError(
            f"Line {line_number} of {path} has {len(row)} columns instead of "
            f"{len(MANIFEST_COLUMNS)}."
        )
    clean_path, speckled_path, look, seed, split = row
    try:
        return ManifestEntry(clean_path, speckled_path, int(look), int(seed), split)
    except ValueError as e:
        raise DataError(f"Line {line_number} of {path} is malformed: {e}") from e


def _read_metadata(path: Path) -> dict[str, Any]:
    if not path.is_file():
        return {}
    try:
        return tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as e:
        raise DataError(f"Could not read {path}: {e}") from e
