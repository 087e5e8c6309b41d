#!/usr/bin/env python3
"""Convert the digits bundled in the `mnist` npm package into gzipped IDX files.

The package (github.com/cazala/mnist, MIT) ships ~10k MNIST digits as one JSON
file per class, pixels stored as intensity/255 rounded to three decimals. That
rounding is below half a grey level, so the original bytes are recovered
exactly with round(v * 255).

Per class, the first 80% of samples go to the train file and the rest to the
test file; each file is then shuffled with a fixed seed.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_from_npm.py package/src/digits data/mnist
"""
import gzip
import hashlib
import json
import random
import struct
import sys
from pathlib import Path

ROWS = COLS = 28
TRAIN_FRACTION = 0.8
SEED = 20251015


def load_digits(src):
    per_class = []
    for label in range(10):
        raw = json.loads((src / f"{label}.json").read_text())["data"]
        n = len(raw) // (ROWS * COLS)
        samples = []
        for k in range(n):
            px = raw[k * ROWS * COLS:(k + 1) * ROWS * COLS]
            samples.append(bytes(min(255, max(0, round(v * 255))) for v in px))
        per_class.append(samples)
    return per_class


def write_idx(path_images, path_labels, items):
    with gzip.GzipFile(path_images, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(items), ROWS, COLS))
        for img, _ in items:
            f.write(img)
    with gzip.GzipFile(path_labels, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(items)))
        f.write(bytes(label for _, label in items))


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    dst.mkdir(parents=True, exist_ok=True)
    train, test = [], []
    for label, samples in enumerate(load_digits(src)):
        cut = int(len(samples) * TRAIN_FRACTION)
        train += [(s, label) for s in samples[:cut]]
        test += [(s, label) for s in samples[cut:]]
    rng = random.Random(SEED)
    rng.shuffle(train)
    rng.shuffle(test)

    names = {
        "train_images": "train-images-idx3-ubyte.gz",
        "train_labels": "train-labels-idx1-ubyte.gz",
        "test_images": "t10k-images-idx3-ubyte.gz",
        "test_labels": "t10k-labels-idx1-ubyte.gz",
    }
    write_idx(dst / names["train_images"], dst / names["train_labels"], train)
    write_idx(dst / names["test_images"], dst / names["test_labels"], test)

    manifest = {
        "name": "mnist",
        "source": "npm:mnist@1.1.0 (10k-digit sample of MNIST)",
        "files": {k: {"path": v, "sha256": sha256(dst / v)} for k, v in names.items()},
    }
    (dst / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"train={len(train)} test={len(test)} -> {dst}")


if __name__ == "__main__":
    main()
