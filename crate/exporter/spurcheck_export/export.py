"""Encode every context window of a ``contexts.jsonl`` into a CEV1 file."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

import numpy as np

from .cev import ExportManifest, encode_cev, read_contexts, sha256_file, write_atomic
from .encoder import POOLING, Encoder


def manifest_path_for(binary: str | os.PathLike) -> Path:
    """Default location of the export manifest: ``<binary>.json``."""
    return Path(str(binary) + ".json")


def export(
    contexts_path: str | os.PathLike,
    encoder: Encoder,
    out_path: str | os.PathLike,
    batch_size: int = 32,
    manifest_out: Optional[str | os.PathLike] = None,
) -> ExportManifest:
    """Writes the binary and its export manifest and returns the manifest.

    Each distinct token sequence is encoded once, so identical windows get
    bit-identical vectors whatever batch they would have landed in.
    Records are written in the order of the context file.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    contexts = read_contexts(contexts_path)
    unique: dict[tuple[str, ...], int] = {}
    for c in contexts:
        unique.setdefault(c.tokens, len(unique))
    sequences = list(unique)
    # similar lengths share a batch to keep padding small
    order = sorted(range(len(sequences)), key=lambda i: (len(sequences[i]), i))
    vectors = np.zeros((len(sequences), encoder.dim), dtype=np.float32)
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        encoded = encoder.encode([sequences[i] for i in idx])
        if encoded.shape != (len(idx), encoder.dim):
            raise RuntimeError(f"encoder returned shape {encoded.shape}, expected {(len(idx), encoder.dim)}")
        vectors[idx] = encoded

    matrix = vectors[[unique[c.tokens] for c in contexts]] if contexts else np.zeros((0, encoder.dim), np.float32)
    data = encode_cev([c.context_id for c in contexts], matrix)
    write_atomic(out_path, data)

    manifest = ExportManifest(
        model=encoder.name,
        revision=encoder.revision,
        dim=encoder.dim,
        hidden_size=encoder.hidden_size,
        count=len(contexts),
        manifest_sha256=sha256_file(contexts_path),
        pooling=POOLING,
        binary_sha256=sha256_file(out_path),
    )
    if manifest.dim != 4 * manifest.hidden_size:
        raise RuntimeError(f"dim {manifest.dim} is not 4 x hidden size {manifest.hidden_size}")
    manifest.write(manifest_out or manifest_path_for(out_path))
    return manifest
