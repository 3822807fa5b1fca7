#!/usr/bin/env python3
"""Fetch MNIST and write it as a single merged IDX pair.

Tries the canonical mirrors first (70,000 samples). When those are
unreachable it falls back to the 10,000-sample subset embedded in the npm
`mnist` package, whose pixel values are 3-decimal roundings of byte/255 and
convert back to the original bytes exactly.

Output: <out>/images-idx3-ubyte and <out>/labels-idx1-ubyte.
"""

import argparse
import gzip
import json
import os
import shutil
import struct
import subprocess
import sys
import tarfile
import tempfile
import urllib.request

MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
]
FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def write_idx(out_dir, images, labels):
    assert len(images) == len(labels)
    n = len(labels)
    with open(os.path.join(out_dir, "images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for img in images:
            f.write(img)
    with open(os.path.join(out_dir, "labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(labels))
    print(f"wrote {n} samples to {out_dir}")


def parse_idx_pair(images_path, labels_path):
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", f.read(16))
        assert magic == 0x803 and rows == 28 and cols == 28
        images = [f.read(784) for _ in range(n)]
    with open(labels_path, "rb") as f:
        magic, m = struct.unpack(">II", f.read(8))
        assert magic == 0x801 and m == n
        labels = list(f.read(n))
    return images, labels


def try_mirrors(out_dir):
    for base in MIRRORS:
        try:
            with tempfile.TemporaryDirectory() as tmp:
                for name in FILES:
                    dst = os.path.join(tmp, name[:-3])
                    with urllib.request.urlopen(base + name, timeout=30) as r:
                        with gzip.open(r, "rb") as gz, open(dst, "wb") as out:
                            shutil.copyfileobj(gz, out)
                imgs, labs = parse_idx_pair(
                    os.path.join(tmp, FILES[0][:-3]), os.path.join(tmp, FILES[1][:-3])
                )
                imgs2, labs2 = parse_idx_pair(
                    os.path.join(tmp, FILES[2][:-3]), os.path.join(tmp, FILES[3][:-3])
                )
                write_idx(out_dir, imgs + imgs2, labs + labs2)
                return True
        except Exception as e:  # noqa: BLE001 - any mirror failure falls through
            print(f"mirror {base} failed: {e}", file=sys.stderr)
    return False


def try_npm(out_dir):
    try:
        with tempfile.TemporaryDirectory() as tmp:
            subprocess.run(
                ["npm", "pack", "mnist", "--silent"],
                cwd=tmp,
                check=True,
                stdout=subprocess.DEVNULL,
            )
            tarball = next(f for f in os.listdir(tmp) if f.endswith(".tgz"))
            with tarfile.open(os.path.join(tmp, tarball)) as tar:
                tar.extractall(tmp)
            images, labels = [], []
            for digit in range(10):
                path = os.path.join(tmp, "package", "src", "digits", f"{digit}.json")
                with open(path) as f:
                    flat = json.load(f)["data"]
                assert len(flat) % 784 == 0
                for s in range(len(flat) // 784):
                    px = flat[s * 784 : (s + 1) * 784]
                    images.append(bytes(round(v * 255) for v in px))
                    labels.append(digit)
            write_idx(out_dir, images, labels)
            return True
    except Exception as e:  # noqa: BLE001
        print(f"npm fallback failed: {e}", file=sys.stderr)
        return False


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/mnist", help="output directory")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    if try_mirrors(args.out):
        return 0
    print("canonical mirrors unreachable; using the npm-packaged subset")
    if try_npm(args.out):
        return 0
    print("could not obtain MNIST from any source", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
