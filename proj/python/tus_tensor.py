"""Reader for the tensor files and manifests written by the `tus` tool."""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TUSTENSR"
HEADER_BYTES = 64


class TensorFormatError(ValueError):
    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


def read_tensor(path):
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_BYTES:
        raise TensorFormatError("truncated", "file shorter than the header")
    if raw[:8] != MAGIC:
        raise TensorFormatError("bad_magic", "not a tensor file")
    version, dtype, rank, _ = struct.unpack_from("<4I", raw, 8)
    if version != 1:
        raise TensorFormatError("bad_version", f"version {version}")
    if dtype != 1:
        raise TensorFormatError("bad_dtype", f"dtype {dtype}")
    if rank not in (2, 3):
        raise TensorFormatError("bad_shape", f"rank {rank}")
    dims = struct.unpack_from("<3Q", raw, 24)[:rank]
    if any(d == 0 for d in dims):
        raise TensorFormatError("bad_shape", "zero dimension")
    expected = int(np.prod(dims)) * 4
    payload = len(raw) - HEADER_BYTES
    if payload < expected:
        raise TensorFormatError("truncated", f"payload {payload} < {expected} bytes")
    if payload > expected:
        raise TensorFormatError("shape_mismatch", "payload longer than the shape implies")
    return np.frombuffer(raw, dtype="<f4", offset=HEADER_BYTES).reshape(dims).copy()


def load_manifest(path, verify=True):
    path = Path(path)
    manifest = json.loads(path.read_text())
    if manifest.get("schema_version") != 1:
        raise TensorFormatError("schema", "unsupported manifest schema version")
    if verify:
        for name, entry in manifest.get("files", {}).items():
            f = path.parent / entry["path"]
            if hashlib.sha256(f.read_bytes()).hexdigest() != entry["sha256"]:
                raise TensorFormatError("checksum", f"checksum mismatch for '{name}'")
    return manifest


def load_file(manifest_path, name):
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    return read_tensor(manifest_path.parent / manifest["files"][name]["path"])
