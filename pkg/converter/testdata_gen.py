#!/usr/bin/env python3
"""Generate and refresh the converter's stored test fixtures.

Produces two files under converter/fixtures/:
  input_224.ppm         deterministic 224x224 test image
  reference_logits.json logits of a trunk_only-loaded modified_vgg19
                        (head seed 0) on that image, trunk taken from
                        the deterministic synthetic source archive

The synthetic source stands in for a real pretrained dump: same keys,
same shapes, values drawn from a seeded generator with fan-in scaling
so activations stay O(1) through the deep trunk. Tests import
source_entries() so the archive they convert is identical to the one
used to freeze the reference.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from convert import CONVERSION_MAP, convert  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"
SOURCE_SEED = 11
HEAD_SEED = 0


def source_entries(seed: int = SOURCE_SEED) -> dict:
    """Synthetic torchvision-layout VGG-19 trunk, deterministic by seed."""
    rng = np.random.default_rng(seed)
    out = {}
    for source_base, _, weight_shape in CONVERSION_MAP:
        fan_in = weight_shape[1] * weight_shape[2] * weight_shape[3]
        std = np.sqrt(2.0 / fan_in)
        out[f"{source_base}.weight"] = rng.normal(
            0.0, std, size=weight_shape).astype(np.float32)
        out[f"{source_base}.bias"] = rng.normal(
            0.0, 0.01, size=weight_shape[:1]).astype(np.float32)
    return out


def write_input_ppm(path, size: int = 224) -> None:
    """Deterministic smooth pattern, P6 binary."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r = 127.5 + 100.0 * np.sin(xx / 11.0) * np.cos(yy / 17.0)
    g = 255.0 * (xx + yy) / (2.0 * (size - 1))
    b = 127.5 + 120.0 * np.cos((xx - yy) / 23.0)
    raster = np.stack([r, g, b], axis=-1).round().clip(0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{size} {size}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def reference_logits(skpt_path, image_path):
    """Forward the stored image through a trunk_only-loaded network."""
    from statekit.checkpoint import load_checkpoint
    from statekit.data import PreprocessConfig, load_image, preprocess_image
    from statekit.model import build_preset
    from statekit.tensor import deterministic_mode

    net = build_preset("modified_vgg19", 11, fc_width=1024, seed=HEAD_SEED)
    load_checkpoint(net, skpt_path, "trunk_only")
    img = load_image(image_path)
    x = preprocess_image(img, PreprocessConfig()).astype(np.float32)[None]
    with deterministic_mode(True):
        logits = net.forward(x, train=False)
    return [float(v) for v in logits[0]]


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    image = FIXTURES / "input_224.ppm"
    write_input_ppm(image)

    with tempfile.TemporaryDirectory() as tmp:
        source = Path(tmp) / "vgg19_source.npz"
        np.savez(source, **source_entries())
        skpt = Path(tmp) / "trunk.skpt"
        convert(source, skpt)
        logits = reference_logits(skpt, image)

    payload = {"source_seed": SOURCE_SEED, "head_seed": HEAD_SEED,
               "logits": logits}
    (FIXTURES / "reference_logits.json").write_text(
        json.dumps(payload, indent=2) + "\n")
    print(f"wrote {image.name} and reference_logits.json under {FIXTURES}")
    print("logits:", " ".join(f"{v:.6f}" for v in logits))
    return 0


if __name__ == "__main__":
    sys.exit(main())
