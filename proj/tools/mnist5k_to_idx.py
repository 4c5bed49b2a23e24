#!/usr/bin/env python3
"""Convert the 5000-digit MNIST subset shipped with mlxtend into IDX files.

Writes train-images-idx3-ubyte / train-labels-idx1-ubyte (4000 digits) and
t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte (1000 digits). The split is a
fixed seeded permutation stratified by class.

usage: mnist5k_to_idx.py <mlxtend wheel or mnist_5k.csv.gz> <out dir>
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def load_rows(src: Path) -> np.ndarray:
    if src.suffix == ".whl":
        raw = zipfile.ZipFile(src).read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = src.read_bytes()
    return np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")


def write_idx(path: Path, magic: int, dims, payload: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload.astype(np.uint8).tobytes())


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = load_rows(src)
    images, labels = rows[:, :784], rows[:, 784].astype(int)

    rng = np.random.default_rng(20190101)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = rng.permutation(np.flatnonzero(labels == c))
        test_idx.extend(idx[:100])
        train_idx.extend(idx[100:])
    train_idx = rng.permutation(np.array(train_idx))
    test_idx = rng.permutation(np.array(test_idx))

    for name, idx in (("train", train_idx), ("t10k", test_idx)):
        write_idx(out / f"{name}-images-idx3-ubyte", 0x803, (len(idx), 28, 28), images[idx])
        write_idx(out / f"{name}-labels-idx1-ubyte", 0x801, (len(idx),), labels[idx])


if __name__ == "__main__":
    main()
