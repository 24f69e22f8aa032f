"""Bit-exact binary parameter files.

Layout (all integers little-endian):

    magic   4 bytes  b"SKPT"
    version u32      currently 1
    count   u32      number of entries
    entry   repeated count times:
        name_len u16
        name     UTF-8, name_len bytes
        dtype    u8   0 = f32, 1 = f64
        rank     u8
        dims     u64 x rank
        values   raw little-endian, prod(dims) elements

Entries appear in network stack order. Saving the same parameters twice
yields byte-identical files; loading never reformats floats, so a round
trip is exact at both dtypes. ``trunk_only`` mode loads conv-layer entries
and leaves dense layers at their fresh initialization, which is the
fine-tuning path: pretrained trunk under a new head.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError, FormatError
from .model import Network

MAGIC = b"SKPT"
FORMAT_VERSION = 1

_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def write_entries(entries: list[tuple[str, np.ndarray]]) -> bytes:
    """Serialize (name, tensor) pairs in the given order."""
    names = [n for n, _ in entries]
    if len(set(names)) != len(names):
        raise FormatError("duplicate entry names in checkpoint")
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(entries))]
    for name, arr in entries:
        code = _DTYPE_CODES.get(arr.dtype)
        if code is None:
            raise FormatError(f"entry {name!r} has unsupported dtype {arr.dtype}")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<BB", code, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())
    return b"".join(parts)


def read_entries(blob: bytes) -> list[tuple[str, np.ndarray]]:
    """Parse checkpoint bytes; strict about sizes and trailing garbage."""
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 12:
        raise FormatError("truncated checkpoint header")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    off = 12
    entries: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", blob, off)
            off += 2
            if len(blob) < off + name_len:
                raise struct.error
            name = blob[off:off + name_len].decode("utf-8")
            off += name_len
            code, rank = struct.unpack_from("<BB", blob, off)
            off += 2
            dims = struct.unpack_from(f"<{rank}Q", blob, off)
            off += 8 * rank
        except struct.error:
            raise FormatError("truncated checkpoint entry header") from None
        if name in seen:
            raise FormatError(f"duplicate checkpoint entry {name!r}")
        seen.add(name)
        dtype = _CODE_DTYPES.get(code)
        if dtype is None:
            raise FormatError(f"entry {name!r} has unknown dtype code {code}")
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        nbytes = size * dtype.itemsize
        if len(blob) < off + nbytes:
            raise FormatError(f"entry {name!r} payload truncated")
        arr = np.frombuffer(blob, dtype=dtype, count=size, offset=off).reshape(dims)
        off += nbytes
        entries.append((name, arr.copy()))
    if off != len(blob):
        raise FormatError(f"{len(blob) - off} trailing byte(s) after last entry")
    return entries


def save_checkpoint(net: Network, path) -> None:
    entries = list(net.parameters().items())
    blob = write_entries(entries)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise DataError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(net: Network, path, mode: str = "strict") -> Network:
    """Fill network parameters from a checkpoint file.

    strict: every network parameter must be present with matching shape and
    the file may contain nothing else. trunk_only: conv-layer entries are
    required, dense-layer entries (and any extras) are ignored.
    """
    if mode not in ("strict", "trunk_only"):
        raise FormatError(f"unknown load mode {mode!r}")
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    by_name = dict(read_entries(blob))

    conv_names = set(net.conv_layer_names())
    wanted = {}
    for pname, tensor in net.parameters().items():
        layer_name = pname.rpartition(".")[0]
        if mode == "strict" or layer_name in conv_names:
            wanted[pname] = tensor

    for pname, tensor in wanted.items():
        if pname not in by_name:
            raise FormatError(f"checkpoint missing required entry {pname!r}")
        loaded = by_name[pname]
        if loaded.shape != tensor.shape:
            raise FormatError(f"entry {pname!r} has shape {loaded.shape}, "
                              f"network expects {tensor.shape}")
        tensor[...] = loaded.astype(tensor.dtype, copy=False)

    if mode == "strict":
        extra = set(by_name) - set(wanted)
        if extra:
            raise FormatError(f"unexpected checkpoint entries: {sorted(extra)}")
    return net
