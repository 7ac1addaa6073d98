#!/usr/bin/env python3
"""Rebuild the bundled dataset subsets under data/.

Sources are npm packages that ship real samples:
  mnist@1.1.0          10,000 MNIST digits as JSON (pixels in [0, 1], 3 decimals)
  tfjs-cifar10@1.1.1   CIFAR-10 batches as PNG strips (one 1024-pixel RGB row per image)

Outputs (gzip-compressed, readable by `satlab` directly):
  data/mnist/train-images-idx3-ubyte.gz, data/mnist/train-labels-idx1-ubyte.gz
  data/cifar10/data_batch_1.bin.gz      first 5,000 records of data_batch_1

Usage: scripts/build_datasets.py <dir with unpacked mnist package> <dir with unpacked tfjs-cifar10 package>
"""
import gzip
import json
import os
import struct
import sys

import numpy as np
from PIL import Image

CIFAR_RECORDS = 5000


def build_mnist(pkg, out):
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        count = len(flat) // 784
        arr = np.rint(np.asarray(flat, dtype=np.float64).reshape(count, 784) * 255.0)
        images.append(np.clip(arr, 0, 255).astype(np.uint8))
        labels.append(np.full(count, digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    # interleave classes deterministically so prefixes are balanced
    order = np.random.default_rng(20200101).permutation(len(labels))
    images, labels = images[order], labels[order]
    os.makedirs(out, exist_ok=True)
    with gzip.GzipFile(os.path.join(out, "train-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(labels), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(os.path.join(out, "train-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())
    print(f"mnist: {len(labels)} images")


def build_cifar(pkg, out):
    pixels = np.asarray(Image.open(os.path.join(pkg, "data_batch_1.png")).convert("RGB"))
    with open(os.path.join(pkg, "train_lables.json")) as f:
        labels = np.asarray(json.load(f)[:CIFAR_RECORDS], dtype=np.uint8)
    hwc = pixels[:CIFAR_RECORDS].reshape(CIFAR_RECORDS, 32, 32, 3)
    chw = hwc.transpose(0, 3, 1, 2).reshape(CIFAR_RECORDS, 3072)
    records = np.concatenate([labels[:, None], chw], axis=1).astype(np.uint8)
    os.makedirs(out, exist_ok=True)
    with gzip.GzipFile(os.path.join(out, "data_batch_1.bin.gz"), "wb", mtime=0) as f:
        f.write(records.tobytes())
    print(f"cifar10: {CIFAR_RECORDS} records")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
    build_mnist(sys.argv[1], os.path.join(root, "mnist"))
    build_cifar(sys.argv[2], os.path.join(root, "cifar10"))
