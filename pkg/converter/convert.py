#!/usr/bin/env python3
"""Repack a pretrained VGG-19 parameter dump into a .skpt trunk checkpoint.

Reads a numpy .npz archive holding the standard torchvision VGG-19
layout (`features.{index}.weight` / `features.{index}.bias` for the 16
convolution layers) and writes the 32 conv tensors under their canonical
names (`block{i}.conv{j}.weight|bias`) in the .skpt container. The
source's fully connected layers are dropped on purpose: the classifier
head is replaced and retrained downstream, so only the convolutional
trunk is worth carrying over.

Usage: convert.py <source.npz> <out.skpt>

Pure numpy + stdlib; independent of the training package. The .skpt
layout written here follows the published container format: magic
"SKPT", u32 version, u32 entry count, then per entry a u16 name length,
UTF-8 name, u8 dtype code (0 = float32), u8 rank, u64 dims, raw
little-endian values.
"""

import argparse
import struct
import sys

import numpy as np

MAGIC = b"SKPT"
FORMAT_VERSION = 1

# Torchvision VGG-19 `features` indices of the 16 conv layers, in stack
# order; pools and activations occupy the gaps.
FEATURE_INDICES = (0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34)

_BLOCK_WIDTHS = ((1, (64, 64)),
                 (2, (128, 128)),
                 (3, (256, 256, 256, 256)),
                 (4, (512, 512, 512, 512)),
                 (5, (512, 512, 512, 512)))


def conversion_map():
    """Ordered (source_base, canonical_base, weight_shape) triples."""
    out = []
    feature_iter = iter(FEATURE_INDICES)
    in_channels = 3
    for block, widths in _BLOCK_WIDTHS:
        for j, out_channels in enumerate(widths, start=1):
            idx = next(feature_iter)
            out.append((f"features.{idx}",
                        f"block{block}.conv{j}",
                        (out_channels, in_channels, 3, 3)))
            in_channels = out_channels
    return out


CONVERSION_MAP = conversion_map()


class ConversionError(Exception):
    pass


def _pack_entry(name: str, arr: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    data = np.ascontiguousarray(arr, dtype="<f4")
    head = struct.pack("<H", len(encoded)) + encoded
    head += struct.pack("<BB", 0, data.ndim)
    head += struct.pack(f"<{data.ndim}Q", *data.shape)
    return head + data.tobytes()


def write_skpt(entries, out_path) -> None:
    blob = MAGIC + struct.pack("<II", FORMAT_VERSION, len(entries))
    blob += b"".join(_pack_entry(name, arr) for name, arr in entries)
    with open(out_path, "wb") as fh:
        fh.write(blob)


def load_source(path):
    try:
        archive = np.load(path, allow_pickle=False)
    except OSError as exc:
        raise ConversionError(f"cannot read source: {exc}") from exc
    except ValueError as exc:
        raise ConversionError(f"source is not a numpy archive: {exc}") from exc
    return {key: archive[key] for key in archive.files}


def convert(source_path, out_path) -> int:
    """Translate the archive and write the checkpoint. Returns entry count."""
    source = load_source(source_path)
    entries = []
    for source_base, canonical, weight_shape in CONVERSION_MAP:
        for part, shape in (("weight", weight_shape), ("bias", weight_shape[:1])):
            key = f"{source_base}.{part}"
            if key not in source:
                raise ConversionError(
                    f"source is missing {key} (needed for {canonical}.{part})")
            arr = source[key]
            if tuple(arr.shape) != shape:
                raise ConversionError(
                    f"{canonical}.{part}: expected shape {list(shape)}, "
                    f"source {key} has {list(arr.shape)}")
            if not np.issubdtype(arr.dtype, np.floating):
                raise ConversionError(
                    f"{canonical}.{part}: source dtype {arr.dtype} is not float")
            entries.append((f"{canonical}.{part}", arr))
    write_skpt(entries, out_path)
    return len(entries)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Repack VGG-19 conv weights into a .skpt trunk checkpoint.")
    parser.add_argument("source", help="npz archive in torchvision VGG-19 layout")
    parser.add_argument("out", help="destination .skpt path")
    args = parser.parse_args(argv)
    try:
        count = convert(args.source, args.out)
    except ConversionError as exc:
        print(f"convert: error: {exc}", file=sys.stderr)
        return 1
    total = sum(np.prod(shape) + shape[0] for _, _, shape in CONVERSION_MAP)
    print(f"wrote {count} entries ({total:,} values) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
