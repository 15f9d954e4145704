#!/usr/bin/env python3
"""Export the scikit-learn handwritten digits set (1797 8x8 images) as IDX
files, the same container format the MNIST distribution uses. Used to build
offline test fixtures; any real MNIST IDX pair works interchangeably."""

import gzip
import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def main(out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = np.round(digits.images / 16.0 * 255.0).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    n, rows, cols = images.shape

    img_payload = struct.pack(">IIII", 0x803, n, rows, cols) + images.tobytes()
    lab_payload = struct.pack(">II", 0x801, n) + labels.tobytes()

    (out / "digits-images-idx3-ubyte").write_bytes(img_payload)
    (out / "digits-labels-idx1-ubyte").write_bytes(lab_payload)
    with gzip.open(out / "digits-images-idx3-ubyte.gz", "wb") as f:
        f.write(img_payload)
    with gzip.open(out / "digits-labels-idx1-ubyte.gz", "wb") as f:
        f.write(lab_payload)
    print(f"wrote {n} images ({rows}x{cols}) to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
