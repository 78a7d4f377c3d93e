from __future__ import annotations

from pathlib import Path

import pytest
from _neighcnn.dataset import generate_dataset
from _neighcnn.dataset import MANIFEST_NAME
from click.testing import CliRunner
from tests._test_image_helpers import write_clean_images


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(autouse=True)
def _add_objects_to_doctest_namespace(doctest_namespace):
    doctest_namespace["Path"] = Path


@pytest.fixture()
def clean_dir(tmp_path):
    return write_clean_images(tmp_path / "clean_images", n_images=6, size=20)


@pytest.fixture()
def manifest_path(clean_dir, tmp_path):
    generate_dataset(
        clean_dir,
        tmp_path / "dataset",
        looks=[2, 4],
        train_pairs=2,
        validation_pairs=1,
        test_pairs=1,
        image_size=16,
        seed=0,
    )
    return tmp_path / "dataset" / MANIFEST_NAME
