"""Dataset plumbing: manifest parsing, image containers, preprocessing, batching.

The manifest is a UTF-8 CSV with header ``path,split,class_name``. Class
names map to indices through one canonical ordering (``CLASS_NAMES``), which
also fixes confusion-matrix axes everywhere downstream.

Images arrive as 8-bit RGB in one of two containers: binary PPM (P6,
maxval 255) or the trivial ``RAWIMG1`` dump (magic, u32 height, u32 width,
interleaved RGB bytes). Anything richer gets transcoded outside the core.

Preprocessing is deterministic: center-crop by pure index selection (with a
bilinear upscale first only when the image is smaller than the target), then
per-channel ``(x/255 - mean)/std``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DimensionError, FormatError

CLASS_NAMES = ("Floured", "Diced", "Jullienne", "Peeled", "Sliced", "Other",
               "Grated", "Mixed", "Whole", "Juiced", "Creamy Paste")
CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}
NUM_CLASSES = len(CLASS_NAMES)

SPLITS = ("train", "validation", "test")

RAW_MAGIC = b"RAWIMG1"


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    split: str
    label: int
    class_name: str


@dataclass
class Batch:
    images: np.ndarray   # [N, 3, S, S]
    labels: np.ndarray   # [N] integer class indices

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class PreprocessConfig:
    target_size: int = 224
    channel_means: tuple[float, float, float] = (0.485, 0.456, 0.406)
    channel_stds: tuple[float, float, float] = (0.229, 0.224, 0.225)

    def validate(self) -> "PreprocessConfig":
        if self.target_size < 1:
            raise ConfigError(f"target_size must be >= 1, got {self.target_size}")
        if len(self.channel_means) != 3 or len(self.channel_stds) != 3:
            raise ConfigError("channel_means and channel_stds must have 3 entries")
        if any(not s > 0 for s in self.channel_stds):
            raise ConfigError(f"channel_stds must be > 0, got {self.channel_stds}")
        return self


def load_manifest(document: str) -> tuple[list[ManifestEntry], dict]:
    """Parse manifest CSV text into entries plus per-split per-class counts."""
    reader = csv.reader(io.StringIO(document))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty manifest") from None
    if header != ["path", "split", "class_name"]:
        raise DataError(f"manifest header must be path,split,class_name, got {','.join(header)}")

    entries: list[ManifestEntry] = []
    counts = {s: {c: 0 for c in CLASS_NAMES} for s in SPLITS}
    seen: set[tuple[str, str]] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataError(f"manifest line {lineno}: expected 3 fields, got {len(row)}")
        path, split, class_name = row
        if split not in SPLITS:
            raise DataError(f"manifest line {lineno}: unknown split {split!r}")
        if class_name not in CLASS_INDEX:
            raise DataError(f"manifest line {lineno}: unknown class {class_name!r}")
        if (split, path) in seen:
            raise DataError(f"manifest line {lineno}: duplicate path {path!r} in split {split!r}")
        seen.add((split, path))
        entries.append(ManifestEntry(path=path, split=split,
                                     label=CLASS_INDEX[class_name], class_name=class_name))
        counts[split][class_name] += 1
    return entries, counts


def split_entries(entries: list[ManifestEntry], split: str) -> list[ManifestEntry]:
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}; expected one of {', '.join(SPLITS)}")
    return [e for e in entries if e.split == split]


def _parse_ppm(blob: bytes, path) -> np.ndarray:
    # Header tokens (magic, width, height, maxval) separated by whitespace,
    # with # comments running to end of line; a single whitespace byte then
    # precedes the raster.
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(blob):
            c = blob[pos:pos + 1]
            if c == b"#":
                while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header")
        return blob[start:pos]

    if token() != b"P6":
        raise FormatError(f"{path}: not a binary P6 PPM")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError:
        raise FormatError(f"{path}: malformed PPM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: PPM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad PPM extents {width}x{height}")
    pos += 1  # the single whitespace byte after maxval
    raster = blob[pos:]
    expect = 3 * width * height
    if len(raster) != expect:
        raise FormatError(f"{path}: PPM raster has {len(raster)} bytes, expected {expect}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def _parse_rawimg(blob: bytes, path) -> np.ndarray:
    if len(blob) < len(RAW_MAGIC) + 8:
        raise FormatError(f"{path}: truncated RAWIMG1 header")
    height = int.from_bytes(blob[7:11], "little")
    width = int.from_bytes(blob[11:15], "little")
    if height < 1 or width < 1:
        raise FormatError(f"{path}: bad RAWIMG1 extents {height}x{width}")
    raster = blob[15:]
    expect = 3 * height * width
    if len(raster) != expect:
        raise FormatError(f"{path}: RAWIMG1 payload has {len(raster)} bytes, expected {expect}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def load_image(path) -> np.ndarray:
    """Read a PPM or RAWIMG1 file as uint8 [3,H,W]."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    if blob[:2] == b"P6":
        hwc = _parse_ppm(blob, path)
    elif blob[:len(RAW_MAGIC)] == RAW_MAGIC:
        hwc = _parse_rawimg(blob, path)
    else:
        raise FormatError(f"{path}: unrecognized image container")
    return np.ascontiguousarray(hwc.transpose(2, 0, 1))


def write_ppm(path, image: np.ndarray) -> None:
    """Write uint8 [3,H,W] as binary P6."""
    _, h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image.transpose(1, 2, 0), dtype=np.uint8).tobytes())


def write_rawimg(path, image: np.ndarray) -> None:
    """Write uint8 [3,H,W] in the RAWIMG1 container."""
    _, h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC)
        fh.write(h.to_bytes(4, "little"))
        fh.write(w.to_bytes(4, "little"))
        fh.write(np.ascontiguousarray(image.transpose(1, 2, 0), dtype=np.uint8).tobytes())


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample [3,H,W] to [3,out_h,out_w], half-pixel-center convention."""
    _, h, w = image.shape
    x = image.astype(np.float64, copy=False)

    def grid(n_in: int, n_out: int):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    r0, r1, rf = grid(h, out_h)
    c0, c1, cf = grid(w, out_w)
    top = x[:, r0][:, :, c0] * (1 - cf) + x[:, r0][:, :, c1] * cf
    bot = x[:, r1][:, :, c0] * (1 - cf) + x[:, r1][:, :, c1] * cf
    return top * (1 - rf[None, :, None]) + bot * rf[None, :, None]


def center_crop(image: np.ndarray, target: int) -> np.ndarray:
    """Take the centered target x target window; upscale first if undersized.

    When no resize is needed this is pure index selection, so every output
    pixel equals an input pixel exactly.
    """
    if target < 1:
        raise ConfigError(f"crop target must be >= 1, got {target}")
    if image.ndim != 3 or image.shape[0] != 3:
        raise DimensionError(f"center_crop expects [3,H,W], got {image.shape}")
    _, h, w = image.shape
    if min(h, w) < target:
        scale = target / min(h, w)
        new_h = max(target, round(h * scale))
        new_w = max(target, round(w * scale))
        image = bilinear_resize(image, new_h, new_w)
        _, h, w = image.shape
    r = (h - target) // 2
    c = (w - target) // 2
    return np.ascontiguousarray(image[:, r:r + target, c:c + target])


def normalize(image: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    """Per channel: (x/255 - mean) / std, computed in float64."""
    cfg.validate()
    if image.ndim != 3 or image.shape[0] != 3:
        raise DimensionError(f"normalize expects [3,H,W], got {image.shape}")
    x = image.astype(np.float64, copy=False) / 255.0
    mean = np.asarray(cfg.channel_means, dtype=np.float64)[:, None, None]
    std = np.asarray(cfg.channel_stds, dtype=np.float64)[:, None, None]
    return (x - mean) / std


def denormalize(image: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    """Inverse of ``normalize``, back to the 0..255 scale."""
    cfg.validate()
    mean = np.asarray(cfg.channel_means, dtype=np.float64)[:, None, None]
    std = np.asarray(cfg.channel_stds, dtype=np.float64)[:, None, None]
    return (image * std + mean) * 255.0


def preprocess_image(image: np.ndarray, cfg: PreprocessConfig, dtype=np.float32) -> np.ndarray:
    return normalize(center_crop(image, cfg.target_size), cfg).astype(dtype)


def load_dataset(entries: list[ManifestEntry], cfg: PreprocessConfig, root,
                 dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    """Load and preprocess every entry, preserving manifest order.

    Returns (images [M,3,S,S], labels [M]). Paths resolve relative to
    ``root`` (normally the manifest's directory).
    """
    if not entries:
        raise DataError("no entries to load")
    cfg.validate()
    root = Path(root)
    s = cfg.target_size
    images = np.empty((len(entries), 3, s, s), dtype=dtype)
    labels = np.empty(len(entries), dtype=np.int64)
    for i, e in enumerate(entries):
        images[i] = preprocess_image(load_image(root / e.path), cfg, dtype)
        labels[i] = e.label
    return images, labels


def shuffle_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """The canonical per-epoch permutation, keyed on (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def make_batches(images: np.ndarray, labels: np.ndarray, batch_size: int,
                 seed: int = 0, epoch: int = 0, shuffle: bool = True):
    """Yield Batch objects covering every sample exactly once.

    The order is the seeded (seed, epoch) permutation when shuffling, else
    the given order; the final batch may be short.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    n = len(labels)
    if n == 0:
        raise DataError("cannot batch an empty dataset")
    order = shuffle_order(n, seed, epoch) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield Batch(images=images[idx], labels=labels[idx])
