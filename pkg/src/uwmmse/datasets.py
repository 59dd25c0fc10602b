"""Self-describing channel dataset files.

A dataset is a directory of JSON batch files plus a manifest. Each batch file
carries M, sigma, and per-sample seeds alongside the row-major channel
entries, so any record can be regenerated exactly from its seeds.
"""

import json
from pathlib import Path

import numpy as np

from .channel import ChannelMatrix

BATCH_SCHEMA = "uwmmse.dataset.v1"
MANIFEST_SCHEMA = "uwmmse.manifest.v1"
MANIFEST_NAME = "manifest.json"


def write_dataset(out_dir, batches: list[list[tuple[int, ChannelMatrix]]], config: dict) -> Path:
    """Write batches of (sample_seed, channel) pairs plus the manifest.
    Returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, batch in enumerate(batches):
        if not batch:
            raise ValueError(f"batch {i} is empty")
        m = batch[0][1].n_pairs
        sigma = batch[0][1].sigma
        doc = {
            "schema": BATCH_SCHEMA,
            "M": m,
            "sigma": sigma,
            "samples": [
                {"seed": int(seed), "entries": ch.h.ravel().tolist()}
                for seed, ch in batch
            ],
        }
        name = f"batch_{i:05d}.json"
        with open(out_dir / name, "w") as f:
            json.dump(doc, f)
        files.append(name)
    manifest = {"schema": MANIFEST_SCHEMA, "config": config, "files": files}
    manifest_path = out_dir / MANIFEST_NAME
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest_path


def load_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"{path}: unexpected schema {manifest.get('schema')!r}")
    manifest["_dir"] = str(path.parent)
    return manifest


def load_dataset(path) -> tuple[list[tuple[int, ChannelMatrix]], dict]:
    """Flat list of (sample_seed, channel) pairs plus the manifest."""
    manifest = load_manifest(path)
    base = Path(manifest["_dir"])
    samples = []
    for name in manifest["files"]:
        with open(base / name) as f:
            doc = json.load(f)
        if doc.get("schema") != BATCH_SCHEMA:
            raise ValueError(f"{name}: unexpected schema {doc.get('schema')!r}")
        m = int(doc["M"])
        sigma = float(doc["sigma"])
        for rec in doc["samples"]:
            h = np.array(rec["entries"], dtype=np.float64).reshape(m, m)
            samples.append((int(rec["seed"]), ChannelMatrix(h=h, sigma=sigma)))
    return samples, manifest
