"""Dataset ingestion and generation.

Three data sources feed the benchmarks: IDX-format image/label pairs
(MNIST and Fashion-MNIST layout), a small bundled sentiment corpus in
two-column CSV form, and a Mackey-Glass delay-differential time series
integrated on the fly.  The dataset root directory is ``./data`` unless
the ``QTNN_DATA_DIR`` environment variable points elsewhere.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .numerics import InputError, Rng

__all__ = [
    "FormatError",
    "LabeledDataset",
    "SentimentCorpus",
    "MgConfig",
    "data_dir",
    "load_idx",
    "load_mnist",
    "load_fashion_mnist",
    "load_sentiment",
    "bundled_sentiment_path",
    "split_corpus",
    "mackey_glass",
    "series_to_csv",
    "MNIST_CLASS_NAMES",
    "FASHION_CLASS_NAMES",
]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

MNIST_CLASS_NAMES = [str(d) for d in range(10)]
FASHION_CLASS_NAMES = [
    "t-shirt/top", "trouser", "pullover", "dress", "coat",
    "sandal", "shirt", "sneaker", "bag", "ankle boot",
]


class FormatError(ValueError):
    """Malformed input file; message carries the byte offset or line number."""


def data_dir():
    """Dataset root: $QTNN_DATA_DIR or ./data."""
    return Path(os.environ.get("QTNN_DATA_DIR", "data"))


@dataclass
class LabeledDataset:
    """Flattened inputs in [0, 1] with one-hot labels."""

    inputs: np.ndarray         # samples x features, float64 in [0, 1]
    labels_onehot: np.ndarray  # samples x classes, rows one-hot
    class_names: list

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels_onehot.ndim != 2:
            raise FormatError("inputs and labels must be 2-D")
        if self.inputs.shape[0] != self.labels_onehot.shape[0]:
            raise FormatError(
                f"{self.inputs.shape[0]} inputs vs {self.labels_onehot.shape[0]} labels"
            )
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise FormatError("inputs must lie in [0, 1]")
        row_sums = self.labels_onehot.sum(axis=1)
        if not np.all(row_sums == 1.0) or not np.all(
            (self.labels_onehot == 0.0) | (self.labels_onehot == 1.0)
        ):
            raise FormatError("labels must be one-hot rows")

    @property
    def n_samples(self):
        return self.inputs.shape[0]

    @property
    def n_features(self):
        return self.inputs.shape[1]

    @property
    def n_classes(self):
        return self.labels_onehot.shape[1]

    def labels(self):
        return self.labels_onehot.argmax(axis=1)

    def subset(self, indices):
        return LabeledDataset(
            self.inputs[indices], self.labels_onehot[indices], self.class_names
        )


def _read_maybe_gzip(path):
    """Read a file, transparently inflating gzip (mirrors ship .gz IDX files)."""
    blob = Path(path).read_bytes()
    if blob[:2] == b"\x1f\x8b":
        import gzip

        blob = gzip.decompress(blob)
    return blob


def _read_be32(blob, offset, path):
    if offset + 4 > len(blob):
        raise FormatError(f"{path}: truncated header at byte {offset}")
    return struct.unpack_from(">I", blob, offset)[0]


def load_idx(images_path, labels_path, class_names=None):
    """Load an IDX image/label file pair into a LabeledDataset.

    Big-endian headers, image magic 2051 and label magic 2049.  Pixels are
    scaled by 1/255 and flattened row-major; labels are one-hot over 10
    classes.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    img_blob = _read_maybe_gzip(images_path)
    lab_blob = _read_maybe_gzip(labels_path)

    magic = _read_be32(img_blob, 0, images_path)
    if magic != IMAGE_MAGIC:
        raise FormatError(
            f"{images_path}: bad image magic 0x{magic:08x} at byte 0, expected 0x{IMAGE_MAGIC:08x}"
        )
    n_images = _read_be32(img_blob, 4, images_path)
    rows = _read_be32(img_blob, 8, images_path)
    cols = _read_be32(img_blob, 12, images_path)
    need = 16 + n_images * rows * cols
    if len(img_blob) < need:
        raise FormatError(
            f"{images_path}: truncated payload, have {len(img_blob)} bytes, need {need}"
        )

    magic = _read_be32(lab_blob, 0, labels_path)
    if magic != LABEL_MAGIC:
        raise FormatError(
            f"{labels_path}: bad label magic 0x{magic:08x} at byte 0, expected 0x{LABEL_MAGIC:08x}"
        )
    n_labels = _read_be32(lab_blob, 4, labels_path)
    if n_labels != n_images:
        raise FormatError(
            f"count mismatch: {n_images} images vs {n_labels} labels"
        )
    if len(lab_blob) < 8 + n_labels:
        raise FormatError(
            f"{labels_path}: truncated payload, have {len(lab_blob)} bytes, need {8 + n_labels}"
        )

    pixels = np.frombuffer(img_blob, dtype=np.uint8, count=n_images * rows * cols, offset=16)
    labels = np.frombuffer(lab_blob, dtype=np.uint8, count=n_labels, offset=8)
    if labels.size and labels.max() > 9:
        bad = int(np.argmax(labels > 9))
        raise FormatError(f"{labels_path}: label {labels[bad]} at item {bad} exceeds 9")

    inputs = pixels.reshape(n_images, rows * cols).astype(np.float64) / 255.0
    onehot = np.zeros((n_images, 10))
    onehot[np.arange(n_images), labels] = 1.0
    names = class_names if class_names is not None else list(MNIST_CLASS_NAMES)
    return LabeledDataset(inputs, onehot, names)


def _idx_pair(root, split):
    prefix = "train" if split == "train" else "t10k"
    pair = []
    for kind in (f"{prefix}-images-idx3-ubyte", f"{prefix}-labels-idx1-ubyte"):
        plain = root / kind
        pair.append(plain if plain.exists() else root / f"{kind}.gz")
    return tuple(pair)


def load_mnist(split="train", root=None):
    """MNIST from <data_dir>/mnist using the conventional file names."""
    root = Path(root) if root is not None else data_dir() / "mnist"
    images, labels = _idx_pair(root, split)
    return load_idx(images, labels, MNIST_CLASS_NAMES)


def load_fashion_mnist(split="train", root=None):
    """Fashion-MNIST from <data_dir>/fashion-mnist (same IDX layout)."""
    root = Path(root) if root is not None else data_dir() / "fashion-mnist"
    images, labels = _idx_pair(root, split)
    return load_idx(images, labels, FASHION_CLASS_NAMES)


@dataclass
class SentimentCorpus:
    """Token-index phrase sequences with binary labels."""

    phrases: list      # list of lists of int token indices (>= 1)
    labels: list       # 0 or 1 per phrase
    vocab: dict        # token -> index, 0 reserved for padding

    @property
    def vocab_size(self):
        # including the reserved padding slot 0
        return len(self.vocab) + 1

    def subset(self, indices):
        return SentimentCorpus(
            [self.phrases[i] for i in indices],
            [self.labels[i] for i in indices],
            self.vocab,
        )


def load_sentiment(path):
    """Read a `text,label` CSV into a SentimentCorpus.

    Text is lowercased and split on whitespace; the vocabulary is assigned
    in first-appearance order starting at index 1 so the encoding is a pure
    function of the file contents.
    """
    path = Path(path)
    phrases, labels = [], []
    vocab = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header line 'text,label'")
        if [h.strip().lower() for h in header] != ["text", "label"]:
            raise FormatError(f"{path}: line 1: header must be 'text,label'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
            text, label = row[0].strip(), row[1].strip()
            if label not in ("0", "1"):
                raise FormatError(f"{path}: line {lineno}: label must be 0 or 1, got {label!r}")
            tokens = text.lower().split()
            if not tokens:
                raise FormatError(f"{path}: line {lineno}: empty text")
            ids = []
            for tok in tokens:
                if tok not in vocab:
                    vocab[tok] = len(vocab) + 1
                ids.append(vocab[tok])
            phrases.append(ids)
            labels.append(int(label))
    return SentimentCorpus(phrases, labels, vocab)


def bundled_sentiment_path():
    """Path of the 48-phrase corpus that ships with the package."""
    return resources.files("qtnn").joinpath("assets/sentiment48.csv")


def split_corpus(corpus, train_frac=0.75, seed=0):
    """Deterministic stratified split into (train, test) corpora."""
    rng = Rng(seed)
    labels = np.asarray(corpus.labels)
    train_idx, test_idx = [], []
    for cls in sorted(set(corpus.labels)):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        cut = int(round(train_frac * len(members)))
        train_idx.extend(members[:cut])
        test_idx.extend(members[cut:])
    train_idx.sort()
    test_idx.sort()
    return corpus.subset(train_idx), corpus.subset(test_idx)


@dataclass
class MgConfig:
    """Mackey-Glass generator settings.

    The delay tau must be an integer multiple of the internal step so the
    delayed value falls on stored grid points; the half-step value needed by
    the integrator is linearly interpolated.
    """

    beta_mg: float = 0.2
    gamma_mg: float = 0.1
    tau_mg: float = 17.0
    q: float = 10.0
    dt_internal: float = 0.1
    sample_every: int = 10
    transient: int = 1000
    x0: float = 1.2

    def __post_init__(self):
        for name in ("beta_mg", "gamma_mg", "tau_mg", "q", "dt_internal", "x0"):
            if not getattr(self, name) > 0:
                raise InputError(f"MgConfig.{name} must be positive")
        if self.sample_every < 1 or self.transient < 0:
            raise InputError("sample_every must be >= 1 and transient >= 0")
        lag = self.tau_mg / self.dt_internal
        if abs(lag - round(lag)) > 1e-9 or round(lag) < 1:
            raise InputError("tau_mg/dt_internal must be a positive integer")


def mackey_glass(cfg, n_samples, normalize=True):
    """Integrate the Mackey-Glass delay equation and emit a sampled series.

    Classic fourth-order Runge-Kutta over the internal step; the delayed
    term is read from a ring buffer of past values, linearly interpolated
    at the half step.  Every ``sample_every``-th internal point is emitted,
    the first ``transient`` emitted samples are discarded, and the result
    is min-max rescaled to [0, 1] unless ``normalize`` is off.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    beta, gamma, q = cfg.beta_mg, cfg.gamma_mg, cfg.q
    dt = cfg.dt_internal
    lag = int(round(cfg.tau_mg / dt))

    # ring buffer holds x at the last lag+1 grid points; before t=0 the
    # history is the constant x0
    ring = np.full(lag + 1, cfg.x0)
    head = 0  # position of x(t) within the ring

    def rhs(x, x_delayed):
        return beta * x_delayed / (1.0 + x_delayed**q) - gamma * x

    total = (n_samples + cfg.transient) * cfg.sample_every
    out = np.empty(n_samples + cfg.transient)
    emitted = 0
    x = cfg.x0
    for step in range(total):
        # delayed values: x(t - tau) is the oldest ring slot, x(t + dt - tau)
        # the next one; the half step is their midpoint (linear interpolation)
        oldest = ring[(head + 1) % (lag + 1)]
        if lag == 1:
            nxt = ring[head]
        else:
            nxt = ring[(head + 2) % (lag + 1)]
        half = 0.5 * (oldest + nxt)
        k1 = rhs(x, oldest)
        k2 = rhs(x + 0.5 * dt * k1, half)
        k3 = rhs(x + 0.5 * dt * k2, half)
        k4 = rhs(x + dt * k3, nxt)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        head = (head + 1) % (lag + 1)
        ring[head] = x
        if (step + 1) % cfg.sample_every == 0:
            out[emitted] = x
            emitted += 1
    series = out[cfg.transient :]
    if normalize:
        lo, hi = series.min(), series.max()
        span = hi - lo
        if span == 0.0:
            return np.zeros_like(series)
        return (series - lo) / span
    return series.copy()


def series_to_csv(series, path, dt=1.0):
    """Write a generated series as `t,x` rows (t in emitted-sample units)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x\n")
        for i, value in enumerate(np.asarray(series, dtype=np.float64)):
            fh.write(f"{i * dt:.10g},{value:.17g}\n")
