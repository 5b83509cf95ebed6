"""Build a stratified 4000/1000 MNIST subset in IDX format.

Source: mnist_5k.csv.gz shipped inside the mlxtend wheel (784 pixel
columns followed by the label, 500 images per class).

    pip download mlxtend --no-deps -d /tmp/mlx
    python scripts/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist-subset
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np


def read_source(path: pathlib.Path) -> tuple[np.ndarray, np.ndarray]:
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as zf:
            raw = zf.read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = path.read_bytes()
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",", dtype=np.int64)
    return table[:, :784].astype(np.uint8), table[:, 784].astype(np.uint8)


def write_idx_images(path: pathlib.Path, images: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        f.write(images.tobytes())


def write_idx_labels(path: pathlib.Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.tobytes())


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("source", type=pathlib.Path, help="mlxtend wheel or mnist_5k.csv.gz")
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--train-per-class", type=int, default=400)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()

    images, labels = read_source(args.source)
    rng = np.random.default_rng(args.seed)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = rng.permutation(np.flatnonzero(labels == c))
        train_idx.append(idx[: args.train_per_class])
        test_idx.append(idx[args.train_per_class :])
    train_idx = rng.permutation(np.concatenate(train_idx))
    test_idx = rng.permutation(np.concatenate(test_idx))

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx_images(args.out / "train-images-idx3-ubyte", images[train_idx])
    write_idx_labels(args.out / "train-labels-idx1-ubyte", labels[train_idx])
    write_idx_images(args.out / "t10k-images-idx3-ubyte", images[test_idx])
    write_idx_labels(args.out / "t10k-labels-idx1-ubyte", labels[test_idx])
    print(f"train {len(train_idx)}  test {len(test_idx)}  -> {args.out}")


if __name__ == "__main__":
    main()
