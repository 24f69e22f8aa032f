"""Shared fixtures: one synthetic dataset generated per session."""

from pathlib import Path

import numpy as np
import pytest

from statekit.data import PreprocessConfig, load_dataset, load_manifest, split_entries
from statekit.fixture import generate_fixture


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("dataset")
    generate_fixture(root)
    return root


@pytest.fixture(scope="session")
def fixture_entries(fixture_root):
    text = (fixture_root / "manifest.csv").read_text(encoding="utf-8")
    entries, counts = load_manifest(text)
    return entries, counts


@pytest.fixture(scope="session")
def fixture_arrays(fixture_root, fixture_entries):
    """Preprocessed (images, labels) per split at the tiny 32x32 size."""
    entries, _ = fixture_entries
    cfg = PreprocessConfig(target_size=32)
    out = {}
    for split in ("train", "validation", "test"):
        chosen = split_entries(entries, split)
        out[split] = load_dataset(chosen, cfg, fixture_root)
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
