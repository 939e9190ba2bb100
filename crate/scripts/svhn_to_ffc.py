"""Converts SVHN cropped-digit .mat files (train_32x32.mat, test_32x32.mat)
into FFC1 containers readable by `ffcnn --format raw`.

    python scripts/svhn_to_ffc.py train_32x32.mat data/svhn/train.ffc
    python scripts/svhn_to_ffc.py test_32x32.mat data/svhn/test.ffc

SVHN stores digit 0 as label 10; it is written as 0.
"""

import argparse
import struct

import numpy as np
from scipy.io import loadmat


def convert(src, dst):
    mat = loadmat(src)
    x = np.asarray(mat["X"], dtype=np.uint8)  # H x W x C x N
    y = np.asarray(mat["y"]).reshape(-1).astype(np.int64)
    y[y == 10] = 0
    if y.min() < 0 or y.max() > 9:
        raise ValueError(f"labels outside 0..9 in {src}")
    images = np.ascontiguousarray(x.transpose(3, 0, 1, 2))  # N x H x W x C
    n, h, w, c = images.shape
    if len(y) != n:
        raise ValueError(f"{len(y)} labels for {n} images in {src}")
    with open(dst, "wb") as f:
        f.write(b"FFC1")
        f.write(struct.pack("<4I", n, h, w, c))
        f.write(b"\x01")
        f.write(images.tobytes())
        f.write(y.astype(np.uint8).tobytes())
    return n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", help="SVHN .mat file")
    ap.add_argument("dst", help="output .ffc path")
    args = ap.parse_args()
    print(f"wrote {convert(args.src, args.dst)} images to {args.dst}")


if __name__ == "__main__":
    main()
