"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the code paths they check: IDX files
are serialized with raw struct packing, linear systems are solved by
Gaussian elimination with partial pivoting, and gradients are estimated
with central finite differences.
"""

import struct

import numpy as np
import pytest


def write_idx_pair(images, labels, images_path, labels_path):
    """Serialize uint8 images (n, rows, cols) and labels (n,) as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, n))
        fh.write(labels.tobytes())


def gaussian_elimination_solve(a, b):
    """Solve a x = b by row reduction with partial pivoting."""
    a = np.asarray(a, dtype=np.float64).copy()
    b = np.asarray(b, dtype=np.float64).copy()
    if b.ndim == 1:
        b = b[:, None]
    n = a.shape[0]
    for col in range(n):
        pivot = col + np.argmax(np.abs(a[col:, col]))
        if a[pivot, col] == 0.0:
            raise ZeroDivisionError("singular system")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def numeric_gradient(loss_fn, params, h=1e-5):
    """Central-difference gradient of loss_fn over a list of arrays."""
    grads = []
    for arr in params:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = loss_fn()
            flat[i] = keep - h
            down = loss_fn()
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def relative_error(a, b, floor=1e-12):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


@pytest.fixture
def synthetic_image_data(tmp_path):
    """A small synthetic MNIST-layout dataset written as IDX files.

    Images carry a class-dependent block pattern plus noise so a classifier
    can actually learn them; returns the dataset root directory.
    """
    rng = np.random.default_rng(1234)
    n_per_class, classes, side = 30, 10, 28
    n = n_per_class * classes
    labels = np.repeat(np.arange(classes), n_per_class).astype(np.uint8)
    images = rng.integers(0, 40, size=(n, side, side), dtype=np.uint8).astype(np.uint8)
    for i, lab in enumerate(labels):
        r, c = divmod(int(lab), 5)
        images[i, r * 14 : r * 14 + 14, c * 5 : c * 5 + 5] = 220
    order = rng.permutation(n)
    images, labels = images[order], labels[order]
    for sub in ("mnist", "fashion-mnist"):
        root = tmp_path / sub
        root.mkdir()
        write_idx_pair(images[: n // 2], labels[: n // 2],
                       root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte")
        write_idx_pair(images[n // 2 :], labels[n // 2 :],
                       root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte")
    return tmp_path
