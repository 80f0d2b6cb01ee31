"""File-backed object store with atomic writes.

Layout under a root directory:

    templates/{id}.json
    sessions/{id}.json
    images/{id}.png

Ids are 128-bit random hex. Every write lands in a temp file in the same
directory, is flushed and fsynced, then renamed over the target, so a crash
at any point leaves either the previous content or the new content, never a
torn file.
"""

from __future__ import annotations

import os
import secrets
from pathlib import Path

KINDS = ("templates", "sessions", "images")


class NotFoundError(KeyError):
    """No stored object under that id."""


def new_id() -> str:
    return secrets.token_hex(16)


class FileStore:
    def __init__(self, root):
        self.root = Path(root)
        for kind in KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, obj_id: str, ext: str) -> Path:
        if kind not in KINDS:
            raise ValueError(f"unknown store kind {kind!r}")
        # ids are hex tokens; reject anything that could escape the directory
        if not obj_id or not all(c in "0123456789abcdef" for c in obj_id):
            raise NotFoundError(obj_id)
        return self.root / kind / f"{obj_id}.{ext}"

    def _write_atomic(self, path: Path, data: bytes) -> None:
        tmp = path.parent / f".{path.name}.{secrets.token_hex(8)}.tmp"
        try:
            with open(tmp, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        finally:
            if tmp.exists():
                tmp.unlink(missing_ok=True)

    def _read(self, path: Path, obj_id: str) -> bytes:
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFoundError(obj_id) from None

    def put_json(self, kind: str, obj_id: str, data: bytes) -> None:
        self._write_atomic(self._path(kind, obj_id, "json"), data)

    def get_json(self, kind: str, obj_id: str) -> bytes:
        return self._read(self._path(kind, obj_id, "json"), obj_id)

    def put_image(self, obj_id: str, png: bytes) -> None:
        self._write_atomic(self._path("images", obj_id, "png"), png)

    def get_image(self, obj_id: str) -> bytes:
        return self._read(self._path("images", obj_id, "png"), obj_id)
