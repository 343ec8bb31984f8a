# Copyright (c) mm-opinion-miner contributors
"""
Binary parameter checkpoints.

Layout: the magic bytes "MMCK", a little-endian uint32 format version, a
uint64 manifest length, the UTF-8 JSON manifest, then every tensor as
little-endian float64 in manifest order. The manifest records a header
(the model configuration and any caller extras) and, per tensor, its name,
shape and byte offset into the blob.
"""
import json
import logging
import struct

import fsspec
import numpy as np
import numpy.typing as npt

from absa.errors import ConfigError, FormatError

from .layers import Module
from .network import EncoderStack, ModelConfig

from typing import Any, Dict, Optional, Tuple

__all__ = [
    "save_checkpoint",
    "load_checkpoint",
    "save_tensors",
    "load_tensors",
    "FORMAT_VERSION",
]

MAGIC = b"MMCK"
FORMAT_VERSION = 1
PREAMBLE = struct.Struct("<4sIQ")

Array = npt.NDArray[np.float64]


def save_tensors(path: str, tensors: Dict[str, Array],
                 header: Dict[str, Any]) -> int:
    """Write named arrays and a JSON header. Returns bytes written."""
    entries = []
    offset = 0
    blobs = []
    for name, value in tensors.items():
        data = np.ascontiguousarray(value, dtype="<f8")
        entries.append({"name": name, "shape": list(data.shape),
                        "offset": offset})
        blobs.append(data.tobytes())
        offset += data.nbytes
    manifest = json.dumps({"header": header, "tensors": entries},
                          sort_keys=True).encode("utf8")
    with fsspec.open(path, "wb") as f:
        f.write(PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(manifest)))
        f.write(manifest)
        for blob in blobs:
            f.write(blob)
    return PREAMBLE.size + len(manifest) + offset


def load_tensors(path: str) -> Tuple[Dict[str, Array], Dict[str, Any]]:
    with fsspec.open(path, "rb") as f:
        content = f.read()
    if len(content) < PREAMBLE.size:
        raise FormatError("truncated checkpoint", locator=path)
    magic, version, length = PREAMBLE.unpack_from(content)
    if magic != MAGIC:
        raise FormatError(f"not a checkpoint (magic {magic!r})", locator=path)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}",
                          locator=path)
    start = PREAMBLE.size
    try:
        manifest = json.loads(content[start:start + length].decode("utf8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"corrupt manifest ({e})", locator=path) from None
    blob = content[start + length:]
    tensors: Dict[str, Array] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = entry["offset"] + 8 * count
        if end > len(blob):
            raise FormatError(f"tensor {entry['name']} is truncated",
                              locator=path)
        tensors[entry["name"]] = np.frombuffer(
            blob, dtype="<f8", count=count, offset=entry["offset"]
        ).reshape(shape).astype(np.float64)
    return tensors, manifest["header"]


def save_checkpoint(path: str, model: Module, config: ModelConfig,
                    extra: Optional[Dict[str, Any]] = None) -> None:
    header = {"config": config.to_dict(), **(extra or {})}
    size = save_tensors(path, model.state_dict(), header)
    logging.info(f"wrote checkpoint of {size:,} bytes to {path}")


def load_checkpoint(path: str, expected: Optional[ModelConfig] = None
                    ) -> Tuple[EncoderStack, Dict[str, Any]]:
    """
    Rebuild the model recorded in a checkpoint. When `expected` is given,
    a checkpoint trained under a different configuration is refused.
    """
    tensors, header = load_tensors(path)
    config = ModelConfig.from_dict(header["config"])
    if expected is not None and expected != config:
        actual = config.to_dict()
        differing = sorted(k for k, v in expected.to_dict().items()
                           if actual[k] != v)
        raise ConfigError(f"checkpoint {path} was trained with a different "
                          f"configuration (differs in {differing})")
    model = EncoderStack(config)
    model.load_state_dict(tensors)
    logging.info(f"loaded {config.variant_name} checkpoint from {path}")
    return model, header
