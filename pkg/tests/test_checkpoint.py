from __future__ import annotations

import struct

import numpy as np
import pytest
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.checkpoint import flatten_arrays
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.checkpoint import save_checkpoint
from _neighcnn.exceptions import CheckpointError


@pytest.fixture()
def checkpoint():
    return Checkpoint(
        kind="model",
        tensors={
            "conv01.kernel": np.arange(18.0).reshape(2, 1, 3, 3),
            "conv01.bias": np.array([0.5, -1.0], dtype=np.float32),
            "adam.m.conv01.bias": np.zeros(2),
        },
        model_config={"depth": 2, "filters": 2, "kernel_size": 3},
        loss_config={"alpha_n": 1e-4, "enabled": ["euclidean"]},
        metadata={"epoch": 3, "best_validation_loss": 0.25, "resumed_from": None},
    )


@pytest.mark.unit
def test_save_and_load_checkpoint(tmp_path, checkpoint):
    path = tmp_path / "model.ncnn"

    save_checkpoint(checkpoint, path)
    loaded = load_checkpoint(path)

    assert path.read_bytes()[:4] == b"NCNN"
    assert loaded.kind == "model"
    assert list(loaded.tensors) == list(checkpoint.tensors)
    for name, value in checkpoint.tensors.items():
        assert loaded.tensors[name].dtype == value.dtype
        assert np.array_equal(loaded.tensors[name], value)
    assert loaded.model_config == checkpoint.model_config
    assert loaded.loss_config == checkpoint.loss_config
    assert loaded.metadata == {"epoch": 3, "best_validation_loss": 0.25}
    assert not path.with_name("model.ncnn.tmp").exists()


@pytest.mark.unit
def test_saving_twice_gives_identical_files(tmp_path, checkpoint):
    save_checkpoint(checkpoint, tmp_path / "first.ncnn")
    save_checkpoint(checkpoint, tmp_path / "second.ncnn")
    assert (tmp_path / "first.ncnn").read_bytes() == (
        tmp_path / "second.ncnn"
    ).read_bytes()


@pytest.mark.unit
def test_tensors_with_prefix(checkpoint):
    assert list(checkpoint.tensors_with_prefix("adam.m.")) == ["conv01.bias"]


@pytest.mark.unit
def test_only_floats_can_be_stored(tmp_path):
    with pytest.raises(CheckpointError, match="int64"):
        save_checkpoint(
            Checkpoint("model", {"steps": np.array([1], dtype=np.int64)}),
            tmp_path / "model.ncnn",
        )


@pytest.mark.unit
def test_flatten_arrays():
    tree = {"m": {"a": np.zeros(1), "b": np.ones(2)}, "step": np.array(3.0)}
    assert list(flatten_arrays(tree)) == ["m.a", "m.b", "step"]


@pytest.mark.unit
def test_load_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError, match="does not exist"):
        load_checkpoint(tmp_path / "missing.ncnn")


def _valid_bytes(tmp_path, checkpoint):
    path = tmp_path / "valid.ncnn"
    save_checkpoint(checkpoint, path)
    return path.read_bytes()


@pytest.mark.unit
@pytest.mark.parametrize(
    "corrupt, match",
    [
        (lambda content: content[:5], "too short"),
        (lambda content: b"ABCD" + content[4:], "magic"),
        (
            lambda content: content[:4] + struct.pack("<H", 2) + content[6:],
            "format version 2",
        ),
        (lambda content: content[:-3], "malformed"),
        (lambda content: content + b"\x01", "malformed"),
    ],
)
def test_load_malformed_checkpoint(tmp_path, checkpoint, corrupt, match):
    path = tmp_path / "model.ncnn"
    path.write_bytes(corrupt(_valid_bytes(tmp_path, checkpoint)))

    with pytest.raises(CheckpointError, match=match):
        load_checkpoint(path)


@pytest.mark.unit
def test_load_checkpoint_with_missing_tensor(tmp_path, checkpoint):
    content = _valid_bytes(tmp_path, checkpoint)
    reduced = Checkpoint("model", dict(list(checkpoint.tensors.items())[:2]))
    reduced_content = _valid_bytes(tmp_path, reduced)
    # Keep the header announcing three tensors but drop the last one.
    (header_length,) = struct.unpack_from("<I", content, 6)
    (reduced_header_length,) = struct.unpack_from("<I", reduced_content, 6)
    path = tmp_path / "model.ncnn"
    path.write_bytes(
        content[: 10 + header_length] + reduced_content[10 + reduced_header_length :]
    )

    with pytest.raises(CheckpointError, match="announces 3 tensors"):
        load_checkpoint(path)
