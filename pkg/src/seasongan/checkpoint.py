"""Single-file archive for network parameters and training state.

Layout: magic, format version (uint32 LE), header length (uint64 LE), a
JSON header, the raw array payload, and a SHA-256 digest of everything before
it. The header echoes the configuration and lists every array with its
dtype, shape and byte range.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"SEASONGAN-CKPT\x00\x00"
FORMAT_VERSION = 1
_DIGEST = 32


class CheckpointError(ValueError):
    """The archive is truncated, corrupted or from another format version."""


def write_archive(path, config: dict, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write atomically: the target only ever holds a complete archive."""
    entries, chunks, offset = [], [], 0
    for name, arr in arrays.items():
        arr = np.asarray(arr, order="C")
        raw = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        entries.append({"name": name, "dtype": arr.dtype.str.lstrip("<>|="), "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"format_version": FORMAT_VERSION, "config": config, "meta": meta,
                         "arrays": entries}, sort_keys=True).encode()
    body = b"".join([MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(header)), header, *chunks])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(body)
            fh.write(hashlib.sha256(body).digest())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_archive(path) -> tuple[dict, dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    fixed = len(MAGIC) + 12
    if len(blob) < fixed + _DIGEST or not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint archive or truncated")
    version, header_len = struct.unpack("<IQ", blob[len(MAGIC):fixed])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch, archive is corrupted or truncated")
    try:
        header = json.loads(body[fixed:fixed + header_len])
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from None
    payload = body[fixed + header_len:]
    arrays = {}
    for e in header["arrays"]:
        raw = payload[e["offset"]:e["offset"] + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise CheckpointError(f"{path}: array {e['name']} is truncated")
        dtype = np.dtype(e["dtype"]).newbyteorder("<")
        arrays[e["name"]] = np.frombuffer(raw, dtype=dtype).astype(dtype.newbyteorder("="))\
            .reshape(tuple(e["shape"])).copy()
    return header["config"], header["meta"], arrays
