"""Synthetic 11-class image fixture.

Generates a small dataset of solid-color/striped patterns, one visual motif
per class, so the whole pipeline can run end to end without the real
dataset. Train images carry mild pixel noise; validation and test images
get much stronger noise plus a random brightness shift, and every fourth
held-out image is drawn from a neighboring class's pattern while keeping
its own label. That contaminated quarter behaves like real label noise: a
small network memorizes the train split quickly and grows ever more
confidently wrong on those samples, so held-out loss bottoms out and climbs
while train loss keeps falling, the overfitting dynamic the training tests
look for.

Files alternate between the PPM and RAWIMG1 containers so both loaders get
exercised. Everything is keyed on one seed; identical calls produce
identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import CLASS_NAMES, write_ppm, write_rawimg

# One base RGB per class, spread around the color wheel.
_PALETTE = np.array([
    [200, 60, 60], [60, 200, 60], [60, 60, 200], [200, 200, 60],
    [200, 60, 200], [60, 200, 200], [230, 140, 40], [140, 40, 230],
    [40, 230, 140], [120, 120, 120], [240, 240, 240]], dtype=np.float64)

TRAIN_NOISE = 10.0
HELDOUT_NOISE = 35.0
HELDOUT_SHIFT = 25.0
CONTAMINATE_EVERY = 4   # every 4th held-out image wears a foreign pattern


def class_pattern(label: int, size: int) -> np.ndarray:
    """Deterministic base image for a class: its color plus angled stripes."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    # Stripe direction and frequency both depend on the class so no two
    # patterns differ by color alone.
    angle = np.pi * label / len(CLASS_NAMES)
    freq = 2.0 + (label % 4)
    phase = 2 * np.pi * freq * (np.cos(angle) * xx + np.sin(angle) * yy) / size
    stripes = 45.0 * np.sin(phase)
    img = _PALETTE[label][:, None, None] + stripes[None, :, :]
    return img


def make_image(label: int, size: int, rng: np.random.Generator,
               heldout: bool, contaminated: bool = False) -> np.ndarray:
    source = (label + 1) % len(CLASS_NAMES) if contaminated else label
    img = class_pattern(source, size)
    if heldout:
        img = img + rng.normal(0.0, HELDOUT_NOISE, img.shape)
        img = img + rng.uniform(-HELDOUT_SHIFT, HELDOUT_SHIFT)
    else:
        img = img + rng.normal(0.0, TRAIN_NOISE, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_fixture(root, images_per_class: tuple[int, int, int] = (16, 4, 4),
                     size: int = 32, seed: int = 1234) -> Path:
    """Write images plus manifest.csv under ``root``; returns the manifest path.

    ``images_per_class`` gives (train, validation, test) counts per class.
    """
    root = Path(root)
    img_dir = root / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    lines = ["path,split,class_name"]
    splits = ("train", "validation", "test")
    for label, class_name in enumerate(CLASS_NAMES):
        slug = class_name.lower().replace(" ", "_")
        for split, count in zip(splits, images_per_class):
            for i in range(count):
                heldout = split != "train"
                contaminated = heldout and i % CONTAMINATE_EVERY == CONTAMINATE_EVERY - 1
                img = make_image(label, size, rng, heldout, contaminated)
                ext = "ppm" if i % 2 == 0 else "raw"
                rel = f"images/{split}_{slug}_{i:02d}.{ext}"
                if ext == "ppm":
                    write_ppm(root / rel, img)
                else:
                    write_rawimg(root / rel, img)
                lines.append(f"{rel},{split},{class_name}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
