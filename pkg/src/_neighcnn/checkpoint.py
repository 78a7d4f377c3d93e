"""Save and load checkpoints.

A checkpoint file starts with the magic ``NCNN``, a format version (u16) and the length
of a header (u32). The header is a TOML document with the kind of the checkpoint, the
model and loss configuration and further metadata. Named tensors follow until the end
of the file, each stored as

- the length of the name (u16) and the UTF-8 encoded name,
- a dtype code (u8, 0 for float32 and 1 for float64) and the number of axes (u8),
- one u32 per axis, and
- the raw values in row-major order.

All numbers are little-endian.

"""
from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Any
from typing import Dict

import attr
import numpy as np
import tomli
import tomli_w
from _neighcnn.exceptions import CheckpointError
from _neighcnn.shared import find_duplicates
from pybaum.tree_util import leaf_names
from pybaum.tree_util import tree_just_flatten


__all__ = [
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "flatten_arrays",
    "load_checkpoint",
    "save_checkpoint",
]


CHECKPOINT_MAGIC = b"NCNN"
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")
_NAME_LENGTH = struct.Struct("<H")
_DTYPE_AND_RANK = struct.Struct("<BB")
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_CODE_DTYPES = {code: dtype for dtype, code in _DTYPE_CODES.items()}


@attr.s(eq=False)
class Checkpoint:
    """The content of a checkpoint file.

    Attributes
    ----------
    kind : str
        ``"model"`` for trained despecklers and ``"feature-extractor"`` for weights of
        the perceptual loss.
    tensors : Dict[str, numpy.ndarray]
        Named arrays in the order in which they are written.
    model_config : Dict[str, Any]
    loss_config : Dict[str, Any]
    metadata : Dict[str, Any]
        Everything else, for example the epoch and the state of early stopping.

    """

    kind = attr.ib(type=str)
    tensors = attr.ib(factory=dict, type=Dict[str, np.ndarray])
    model_config = attr.ib(factory=dict, type=Dict[str, Any])
    loss_config = attr.ib(factory=dict, type=Dict[str, Any])
    metadata = attr.ib(factory=dict, type=Dict[str, Any])

    def tensors_with_prefix(self, prefix: str) -> dict[str, np.ndarray]:
        """Return tensors whose names start with the prefix, without the prefix."""
        return {
            name[len(prefix) :]: value
            for name, value in self.tensors.items()
            if name.startswith(prefix)
        }


def flatten_arrays(tree: Any) -> dict[str, np.ndarray]:
    """Flatten a nested dictionary of arrays into dotted names.

    Examples
    --------
    >>> flatten_arrays({"adam": {"m": {"w": np.zeros(1)}}, "w": np.ones(1)})
    {'adam.m.w': array([0.]), 'w': array([1.])}

    """
    return dict(zip(leaf_names(tree, separator="."), tree_just_flatten(tree)))


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    """Write a checkpoint atomically.

    The file is first written next to the target and then moved into place, so that an
    interruption never leaves a truncated checkpoint behind.

    """
    path = Path(path)
    header = {
        "kind": checkpoint.kind,
        "n_tensors": len(checkpoint.tensors),
        "model": _drop_none(checkpoint.model_config),
        "loss": _drop_none(checkpoint.loss_config),
        "metadata": _drop_none(checkpoint.metadata),
    }
    header_bytes = tomli_w.dumps(header).encode("utf-8")

    chunks = [
        _PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header_bytes)),
        header_bytes,
    ]
    for name, value in checkpoint.tensors.items():
        chunks.extend(_encode_tensor(name, value))

    temporary = path.with_name(path.name + ".tmp")
    temporary.write_bytes(b"".join(chunks))
    os.replace(temporary, path)


def _drop_none(value: Any) -> Any:
    """TOML has no null, so keys with ``None`` are left out."""
    if isinstance(value, dict):
        return {k: _drop_none(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_drop_none(v) for v in value]
    return value


def _encode_tensor(name: str, value: np.ndarray) -> list[bytes]:
    value = np.asarray(value)
    if value.dtype not in _DTYPE_CODES:
        raise CheckpointError(
            f"The tensor {name!r} has dtype {value.dtype}, but only float32 and "
            "float64 can be stored."
        )
    encoded_name = name.encode("utf-8")
    return [
        _NAME_LENGTH.pack(len(encoded_name)),
        encoded_name,
        _DTYPE_AND_RANK.pack(_DTYPE_CODES[value.dtype], value.ndim),
        struct.pack(f"<{value.ndim}I", *value.shape),
        np.ascontiguousarray(value, dtype=value.dtype.newbyteorder("<")).tobytes(),
    ]


def load_checkpoint(path: Path) -> Checkpoint:
    """Load a checkpoint.

    Raises
    ------
    CheckpointError
        If the file does not exist, is not a checkpoint, has another format version,
        or is malformed.

    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"The checkpoint {path} does not exist.")
    content = path.read_bytes()

    if len(content) < _PREFIX.size:
        raise CheckpointError(f"{path} is too short to be a checkpoint.")
    magic, version, header_length = _PREFIX.unpack_from(content)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint, the magic is {magic!r}.")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path} has checkpoint format version {version}, but this version of "
            f"neighcnn reads version {CHECKPOINT_VERSION}."
        )

    offset = _PREFIX.size
    try:
        header = tomli.loads(content[offset : offset + header_length].decode("utf-8"))
    except (UnicodeDecodeError, tomli.TOMLDecodeError) as e:
        raise CheckpointError(f"The header of {path} is malformed: {e}") from e
    offset += header_length

    names = []
    tensors = {}
    try:
        while offset < len(content):
            name, value, offset = _decode_tensor(content, offset)
            names.append(name)
            tensors[name] = value
    except (struct.error, ValueError, KeyError) as e:
        raise CheckpointError(f"The tensors of {path} are malformed: {e}") from e

    duplicates = find_duplicates(names)
    if duplicates:
        raise CheckpointError(
            f"{path} contains duplicated tensors {sorted(duplicates)}."
        )
    if len(tensors) != header.get("n_tensors", len(tensors)):
        raise CheckpointError(
            f"{path} announces {header['n_tensors']} tensors, but contains "
            f"{len(tensors)}."
        )

    return Checkpoint(
        kind=header.get("kind", "model"),
        tensors=tensors,
        model_config=header.get("model", {}),
        loss_config=header.get("loss", {}),
        metadata=header.get("metadata", {}),
    )


def _decode_tensor(content: bytes, offset: int) -> tuple[str, np.ndarray, int]:
    (name_length,) = _NAME_LENGTH.unpack_from(content, offset)
    offset += _NAME_LENGTH.size
    name = content[offset : offset + name_length].decode("utf-8")
    offset += name_length

    code, ndim = _DTYPE_AND_RANK.unpack_from(content, offset)
    offset += _DTYPE_AND_RANK.size
    shape = struct.unpack_from(f"<{ndim}I", content, offset)
    offset += 4 * ndim

    dtype = _CODE_DTYPES[code].newbyteorder("<")
    n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if offset + n_bytes > len(content):
        raise ValueError(f"the data of {name!r} is truncated")
    count = n_bytes // dtype.itemsize
    value = np.frombuffer(content, dtype=dtype, count=count, offset=offset)
    offset += n_bytes
    return name, value.reshape(shape).astype(_CODE_DTYPES[code]), offset
