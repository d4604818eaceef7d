"""Byte-stable binary checkpoint format for pipeline artifacts.

Layout, all little-endian:

    8-byte magic  b"TRECCKP\\x00"
    uint32 format version (currently 1)
    uint32 kind-string length, then that many UTF-8 bytes
    uint32 number of metadata entries, then per entry:
        uint32 key length, key bytes, int64 value
    uint32 number of arrays, then per array:
        uint32 name length, name bytes
        uint32 ndim, int64 shape per dim
        float64 data, row-major

Writing the same arrays and metadata twice produces identical bytes; there
are no timestamps or environment fields.
"""

import struct

import numpy as np

_MAGIC = b"TRECCKP\x00"
_VERSION = 1


class CheckpointError(ValueError):
    """Raised when a file is not a valid checkpoint of the expected kind."""


def _write_str(fh, text):
    raw = text.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_str(fh):
    (n,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, n).decode("utf-8")


def _read_exact(fh, n):
    raw = fh.read(n)
    if len(raw) != n:
        raise CheckpointError("truncated checkpoint file")
    return raw


def save_checkpoint(path, kind, arrays, meta=None):
    """Write named float arrays plus integer metadata under a kind tag.

    Args:
        path: destination file.
        kind: short ASCII tag identifying the artifact type.
        arrays: dict of name -> array-like, converted to float64.
        meta: optional dict of name -> int.
    """
    meta = meta or {}
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        _write_str(fh, kind)
        fh.write(struct.pack("<I", len(meta)))
        for key in sorted(meta):
            _write_str(fh, key)
            fh.write(struct.pack("<q", int(meta[key])))
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(np.asarray(arrays[name], dtype=np.float64))
            _write_str(fh, name)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<q", dim))
            fh.write(arr.tobytes())


def load_checkpoint(path, expect_kind=None):
    """Read a checkpoint; returns (kind, arrays, meta).

    Raises CheckpointError on a bad magic, version, or truncation, or when
    ``expect_kind`` is given and does not match.
    """
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != _VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        kind = _read_str(fh)
        if expect_kind is not None and kind != expect_kind:
            raise CheckpointError(f"{path}: kind {kind!r}, expected {expect_kind!r}")
        (n_meta,) = struct.unpack("<I", _read_exact(fh, 4))
        meta = {}
        for _ in range(n_meta):
            key = _read_str(fh)
            (meta[key],) = struct.unpack("<q", _read_exact(fh, 8))
        (n_arrays,) = struct.unpack("<I", _read_exact(fh, 4))
        arrays = {}
        for _ in range(n_arrays):
            name = _read_str(fh)
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = struct.unpack(f"<{ndim}q", _read_exact(fh, 8 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
            arrays[name] = data.reshape(shape).copy()
    return kind, arrays, meta
