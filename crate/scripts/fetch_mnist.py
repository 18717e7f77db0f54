#!/usr/bin/env python3
"""Prepare MNIST IDX files for the slicegen experiments.

Two sources are supported:

  full    the official MNIST distribution (60k train / 10k test), downloaded
          from a mirror of the original LeCun files:
            https://ossci-datasets.s3.amazonaws.com/mnist/train-images-idx3-ubyte.gz
            https://ossci-datasets.s3.amazonaws.com/mnist/train-labels-idx1-ubyte.gz
            https://ossci-datasets.s3.amazonaws.com/mnist/t10k-images-idx3-ubyte.gz
            https://ossci-datasets.s3.amazonaws.com/mnist/t10k-labels-idx1-ubyte.gz
          The SHA-256 of every downloaded file is printed so it can be pinned
          in a checksum file (pass --checksums FILE to verify against one).

  subset  the 5000-image MNIST subset shipped inside the `mlxtend` wheel
          (mlxtend/data/data/mnist_5k.csv.gz), re-encoded as IDX. This is what
          data/mnist-5k/ in the repository was generated from:
            python3 scripts/fetch_mnist.py subset --out data/mnist-5k

The library never downloads anything itself; it only reads IDX paths.
"""
import argparse
import gzip
import hashlib
import io
import os
import struct
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

FULL_FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]
BASE_URL = "https://ossci-datasets.s3.amazonaws.com/mnist/"


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_idx_images(path, rows):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
        for r in rows:
            f.write(bytes(r))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def read_subset_csv(wheel):
    with zipfile.ZipFile(wheel) as z:
        return z.read("mlxtend/data/data/mnist_5k.csv.gz")


def subset(out, wheel=None):
    if wheel:
        raw = read_subset_csv(wheel)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            subprocess.check_call(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "mlxtend"]
            )
            found = [f for f in os.listdir(tmp) if f.endswith(".whl")][0]
            raw = read_subset_csv(os.path.join(tmp, found))
    text = gzip.decompress(raw).decode()
    rows, labels = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        vals = [int(float(v)) for v in line.split(",")]
        rows.append(vals[:-1])
        labels.append(vals[-1])
    os.makedirs(out, exist_ok=True)
    write_idx_images(os.path.join(out, "images-idx3-ubyte.gz"), rows)
    write_idx_labels(os.path.join(out, "labels-idx1-ubyte.gz"), labels)
    for name in ("images-idx3-ubyte.gz", "labels-idx1-ubyte.gz"):
        p = os.path.join(out, name)
        print(f"{sha256(p)}  {name}")


def full(out, checksums):
    os.makedirs(out, exist_ok=True)
    expected = {}
    if checksums:
        for line in open(checksums):
            digest, name = line.split()
            expected[name] = digest
    for name in FULL_FILES:
        dest = os.path.join(out, name)
        if not os.path.exists(dest):
            urllib.request.urlretrieve(BASE_URL + name, dest)
        digest = sha256(dest)
        print(f"{digest}  {name}")
        if name in expected and expected[name] != digest:
            sys.exit(f"checksum mismatch for {name}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source", choices=["full", "subset"])
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--checksums")
    ap.add_argument("--wheel", help="use an already downloaded mlxtend wheel")
    args = ap.parse_args()
    if args.source == "subset":
        subset(args.out, args.wheel)
    else:
        full(args.out, args.checksums)


if __name__ == "__main__":
    main()
