#!/usr/bin/env python3
"""Build MNIST-format IDX files from the digits shipped in the npm `mnist` package.

The package stores 10,000 MNIST digits as src/digits/<label>.json, each a flat
list of 784-pixel images with intensities in [0, 1] rounded to three decimals.
Three decimals are finer than 1/255, so the original bytes are recovered
exactly by round(v * 255).

Every fifth image of each class goes to the t10k files, the rest to the train
files. Images are interleaved across classes in round-robin order.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_from_npm.py package data/mnist
"""

import argparse
import json
import struct
import sys
from pathlib import Path

PIXELS = 784


def load_class(path):
    flat = json.loads(path.read_text())["data"]
    if len(flat) % PIXELS:
        sys.exit(f"{path}: length {len(flat)} is not a multiple of {PIXELS}")
    return [bytes(round(v * 255) for v in flat[i:i + PIXELS]) for i in range(0, len(flat), PIXELS)]


def round_robin(per_class):
    out = []
    longest = max(len(v) for v in per_class.values())
    for i in range(longest):
        for label in sorted(per_class):
            if i < len(per_class[label]):
                out.append((per_class[label][i], label))
    return out


def write_idx(directory, prefix, samples):
    with open(directory / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for image, _ in samples:
            f.write(image)
    with open(directory / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("package", type=Path, help="unpacked npm package directory")
    parser.add_argument("out", type=Path, help="output directory")
    parser.add_argument("--test-every", type=int, default=5)
    args = parser.parse_args()

    train, test = {}, {}
    for label in range(10):
        images = load_class(args.package / "src" / "digits" / f"{label}.json")
        test[label] = images[::args.test_every]
        train[label] = [im for i, im in enumerate(images) if i % args.test_every]

    args.out.mkdir(parents=True, exist_ok=True)
    train_samples, test_samples = round_robin(train), round_robin(test)
    write_idx(args.out, "train", train_samples)
    write_idx(args.out, "t10k", test_samples)
    print(f"{len(train_samples)} train, {len(test_samples)} test images in {args.out}")


if __name__ == "__main__":
    main()
