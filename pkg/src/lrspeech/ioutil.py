"""Atomic file writes and content fingerprints."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Iterable


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename.

    An interrupted run never leaves a partial file at the final path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def fingerprint_ids(ids: Iterable[str]) -> str:
    """Order-independent fingerprint of a set of record ids."""
    digest = hashlib.sha256("\n".join(sorted(ids)).encode("utf-8"))
    return digest.hexdigest()[:16]


def fingerprint_json(obj) -> str:
    """Fingerprint of a JSON-serializable object, key order canonicalized."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def safe_filename(name: str) -> str:
    """Replace path separators so a record id can name a file."""
    return "".join("_" if ch in "/\\\0" else ch for ch in name)
