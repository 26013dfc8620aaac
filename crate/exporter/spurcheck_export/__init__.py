"""Context-embedding export for spurcheck."""

from .cev import Context, ExportManifest, FormatError, decode_cev, encode_cev, load_cev, read_contexts, sha256_file, write_cev
from .encoder import POOLING, BertEncoder, Encoder
from .export import export, manifest_path_for

__all__ = [
    "BertEncoder",
    "Context",
    "Encoder",
    "ExportManifest",
    "FormatError",
    "POOLING",
    "decode_cev",
    "encode_cev",
    "export",
    "load_cev",
    "manifest_path_for",
    "read_contexts",
    "sha256_file",
    "write_cev",
]
