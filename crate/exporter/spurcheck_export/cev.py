"""The files shared with the Rust pipeline.

* ``contexts.jsonl`` -- one context window per line, optionally preceded by
  a provenance line ``{"artifact": ..., "config": ..., "seed": ...}``.
* ``CEV1`` binary -- little-endian: magic ``CEV1``, ``u32`` dim, ``u64``
  count, then ``count`` records of ``u64`` context id and ``dim`` ``f32``.
* export manifest -- JSON summary tying the binary to the context file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

MAGIC = b"CEV1"
HEADER = struct.Struct("<4sIQ")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


@dataclass(frozen=True)
class Context:
    context_id: int
    sentence_id: int
    word: str
    position: int
    left: tuple[str, ...] = ()
    right: tuple[str, ...] = ()

    @property
    def tokens(self) -> tuple[str, ...]:
        """The window with the treated word removed."""
        return self.left + self.right


def read_contexts(path: str | os.PathLike) -> list[Context]:
    out: list[Context] = []
    seen: set[int] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
            if lineno == 1 and "artifact" in obj:
                continue
            try:
                ctx = Context(
                    context_id=int(obj["context_id"]),
                    sentence_id=int(obj["sentence_id"]),
                    word=str(obj["word"]),
                    position=int(obj["position"]),
                    left=tuple(obj.get("left", ())),
                    right=tuple(obj.get("right", ())),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: bad context record: {e}") from e
            if ctx.context_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate context_id {ctx.context_id}")
            seen.add(ctx.context_id)
            out.append(ctx)
    return out


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def encode_cev(ids: Iterable[int], vectors: np.ndarray) -> bytes:
    ids = np.asarray(list(ids), dtype="<u8")
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] != ids.shape[0]:
        raise ValueError(f"{ids.shape[0]} ids for vectors of shape {vectors.shape}")
    if len(set(ids.tolist())) != ids.shape[0]:
        raise ValueError("duplicate context ids")
    n, dim = vectors.shape
    records = np.empty(n, dtype=np.dtype([("id", "<u8"), ("v", "<f4", (dim,))]))
    records["id"] = ids
    records["v"] = vectors
    return HEADER.pack(MAGIC, dim, n) + records.tobytes()


def write_cev(path: str | os.PathLike, ids: Iterable[int], vectors: np.ndarray) -> None:
    write_atomic(path, encode_cev(ids, vectors))


def decode_cev(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(ids, vectors)`` in file order."""
    if len(data) < HEADER.size:
        raise FormatError(f"{len(data)} bytes is shorter than the header")
    magic, dim, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    record = 8 + 4 * dim
    body = len(data) - HEADER.size
    if body < count * record:
        raise FormatError(f"truncated: header promises {count} records of dim {dim}")
    if body > count * record:
        raise FormatError(f"{body - count * record} trailing bytes after {count} records")
    records = np.frombuffer(data, dtype=np.dtype([("id", "<u8"), ("v", "<f4", (dim,))]), count=count, offset=HEADER.size)
    ids = records["id"].copy()
    if len(np.unique(ids)) != count:
        raise FormatError("duplicate context_id")
    return ids, records["v"].copy().reshape(count, dim)


def load_cev(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    return decode_cev(Path(path).read_bytes())


@dataclass
class ExportManifest:
    model: str
    dim: int
    count: int
    manifest_sha256: str
    revision: Optional[str] = None
    hidden_size: Optional[int] = None
    pooling: Optional[str] = None
    binary_sha256: Optional[str] = None
    extra: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("extra")
        order = ["model", "revision", "dim", "hidden_size", "count", "manifest_sha256", "pooling", "binary_sha256"]
        return json.dumps({k: d[k] for k in order}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExportManifest":
        d = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)} - {"extra"}
        return cls(**{k: v for k, v in d.items() if k in known}, extra={k: v for k, v in d.items() if k not in known})

    def write(self, path: str | os.PathLike) -> None:
        write_atomic(path, self.to_json().encode())

    @classmethod
    def read(cls, path: str | os.PathLike) -> "ExportManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
