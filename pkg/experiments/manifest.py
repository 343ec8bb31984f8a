# Copyright (c) mm-opinion-miner contributors
"""
Run manifests: what went into a run directory and what came out of it.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import fsspec

from typing import Any, Dict, Iterable, Optional

__all__ = ["RunManifest", "hash_file", "hash_inputs", "MANIFEST_FILE",
           "now_iso"]

MANIFEST_FILE = "manifest.json"
_CHUNK = 1 << 20


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def hash_file(path: str) -> str:
    """SHA-256 of a file's bytes, read through fsspec."""
    digest = hashlib.sha256()
    with fsspec.open(path, "rb") as f:
        while True:
            block = f.read(_CHUNK)
            if not block:
                break
            digest.update(block)
    return digest.hexdigest()


def hash_inputs(paths: Iterable[Optional[str]]) -> Dict[str, str]:
    """
    Content hashes of the input files. Directories (media folders) hash
    every file below them, in sorted order.
    """
    out: Dict[str, str] = {}
    for path in paths:
        if path is None:
            continue
        fs, _, _ = fsspec.get_fs_token_paths(path)
        if fs.isdir(path):
            for name in sorted(fs.find(path)):
                out[name] = hash_file(name)
        else:
            out[path] = hash_file(path)
    return out


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    started: str = field(default_factory=now_iso)
    finished: Optional[str] = None

    def finish(self) -> None:
        self.finished = now_iso()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(**data)

    def write(self, path: str) -> None:
        with fsspec.open(path, "wt", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        logging.info(f"wrote manifest to {path}")

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        with fsspec.open(path, "rt", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
