"""Synthetic non-IID federated datasets and CSV ingestion.

Clients get Gaussian feature clusters: one fixed center per class (scaled
standard basis vectors, so centers are equidistant) plus a per-client
covariate-shift offset of fixed magnitude and random direction. Label
imbalance comes from the per-client class-count matrix; the bundled
four-hospital matrix reproduces a heavily skewed real-world layout.

Each client's samples are split 7:1:2 into train/val/test.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CsvSchemaError
from .rngs import NS_DATA, NS_SPLIT, stream

# Per-hospital sample counts per lesion class (nevus, benign keratosis,
# melanoma) for hospitals A-D.
HOSPITAL_CLASS_COUNTS = (
    (803, 490, 342),
    (1832, 475, 680),
    (3720, 124, 24),
    (1372, 254, 374),
)

CSV_LABEL_COLUMN = "label"


@dataclass(frozen=True)
class DatasetSpec:
    num_classes: int
    feature_dim: int
    client_class_counts: tuple  # M x C, nonnegative ints
    class_mean_scale: float = 3.0
    client_shift_scale: float = 1.0
    noise_std: float = 1.0

    def __post_init__(self):
        if self.num_classes < 1 or self.feature_dim < 1:
            raise ConfigurationError("num_classes and feature_dim must be positive")
        if self.class_mean_scale <= 0 or self.noise_std <= 0 or self.client_shift_scale < 0:
            raise ConfigurationError(
                "class_mean_scale and noise_std must be > 0, client_shift_scale >= 0")
        if self.feature_dim < self.num_classes:
            raise ConfigurationError(
                f"feature_dim ({self.feature_dim}) must be >= num_classes "
                f"({self.num_classes}) to place class centers")
        for m, row in enumerate(self.client_class_counts):
            if len(row) != self.num_classes:
                raise ConfigurationError(f"client {m} count row has wrong length")
            if any(c < 0 for c in row):
                raise ConfigurationError(f"client {m} has a negative class count")
            if sum(row) < 1 or max(row) < 1:
                raise ConfigurationError(f"client {m} must have at least one sample")

    @property
    def num_clients(self):
        return len(self.client_class_counts)


@dataclass(frozen=True)
class ClientData:
    train_features: np.ndarray
    train_labels: np.ndarray
    val_features: np.ndarray
    val_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray

    @property
    def n_train(self):
        return len(self.train_labels)

    @property
    def n_total(self):
        return len(self.train_labels) + len(self.val_labels) + len(self.test_labels)


@dataclass(frozen=True)
class FederatedDataset:
    clients: tuple  # of ClientData
    num_classes: int
    feature_dim: int

    @property
    def num_clients(self):
        return len(self.clients)


def four_hospital_spec(feature_dim=32, divisor=1, class_mean_scale=2.5,
                       client_shift_scale=1.25, noise_std=1.75) -> DatasetSpec:
    """The four-hospital skewed count matrix, optionally scaled down.

    ``divisor`` divides every count, rounding to nearest with a floor of
    one sample so no (client, class) cell empties out entirely.
    """
    if divisor < 1 or int(divisor) != divisor:
        raise ConfigurationError(f"divisor must be a positive integer, got {divisor}")
    counts = tuple(
        tuple(max(1, round(c / divisor)) for c in row)
        for row in HOSPITAL_CLASS_COUNTS
    )
    return DatasetSpec(
        num_classes=3,
        feature_dim=feature_dim,
        client_class_counts=counts,
        class_mean_scale=class_mean_scale,
        client_shift_scale=client_shift_scale,
        noise_std=noise_std,
    )


def class_centers(spec: DatasetSpec) -> np.ndarray:
    """Fixed class centers: scaled standard basis vectors (C x d)."""
    centers = np.zeros((spec.num_classes, spec.feature_dim))
    for c in range(spec.num_classes):
        centers[c, c] = spec.class_mean_scale
    return centers


def generate(spec: DatasetSpec, seed: int) -> FederatedDataset:
    """Deterministic synthetic federation matching the requested counts exactly."""
    centers = class_centers(spec)
    clients = []
    for m, row in enumerate(spec.client_class_counts):
        rng = stream(seed, NS_DATA, m)
        direction = rng.standard_normal(spec.feature_dim)
        norm = np.linalg.norm(direction)
        offset = spec.client_shift_scale * direction / norm
        features = np.empty((sum(row), spec.feature_dim))
        labels = np.empty(sum(row), dtype=np.int64)
        pos = 0
        for c, count in enumerate(row):
            noise = rng.standard_normal((count, spec.feature_dim))
            features[pos:pos + count] = centers[c] + offset + spec.noise_std * noise
            labels[pos:pos + count] = c
            pos += count
        clients.append(split(features, labels, rng=stream(seed, NS_SPLIT, m)))
    return FederatedDataset(tuple(clients), spec.num_classes, spec.feature_dim)


def split(features, labels, ratios=(7, 1, 2), rng=None, seed=None) -> ClientData:
    """Seeded random 7:1:2 partition; val/test floored, remainder to train."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n < 10:
        raise ConfigurationError(f"need at least 10 samples per client to split, got {n}")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or ratios[0] <= 0:
        raise ConfigurationError(f"ratios must be three nonnegative numbers, got {ratios}")
    if rng is None:
        rng = stream(0 if seed is None else seed, NS_SPLIT)
    total = sum(ratios)
    n_val = n * ratios[1] // total
    n_test = n * ratios[2] // total
    n_train = n - n_val - n_test
    order = rng.permutation(n)
    tr, va, te = order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]
    return ClientData(
        train_features=np.ascontiguousarray(features[tr]),
        train_labels=np.ascontiguousarray(labels[tr]),
        val_features=np.ascontiguousarray(features[va]),
        val_labels=np.ascontiguousarray(labels[va]),
        test_features=np.ascontiguousarray(features[te]),
        test_labels=np.ascontiguousarray(labels[te]),
    )


def load_samples_csv(path, num_classes=None):
    """Read ``label,f0,...`` rows into (features, labels).

    Labels must be integers in [0, num_classes) when num_classes is given;
    all rows must share the header's feature count. Errors name the
    offending 1-based line.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError(f"{path}: empty file") from None
        expected = [CSV_LABEL_COLUMN] + [f"f{i}" for i in range(len(header) - 1)]
        if header != expected or len(header) < 2:
            raise CsvSchemaError(
                f"{path}: line 1: header must be 'label,f0,f1,...', got {','.join(header)}")
        width = len(header) - 1
        features, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise CsvSchemaError(
                    f"{path}: line {lineno}: expected {width + 1} fields, got {len(row)}")
            try:
                label = int(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise CsvSchemaError(f"{path}: line {lineno}: {exc}") from None
            if label < 0 or (num_classes is not None and label >= num_classes):
                bound = num_classes if num_classes is not None else "inf"
                raise CsvSchemaError(
                    f"{path}: line {lineno}: label {label} outside [0, {bound})")
            labels.append(label)
            features.append(values)
    if not features:
        raise CsvSchemaError(f"{path}: no data rows")
    return np.asarray(features, dtype=np.float64), np.asarray(labels, dtype=np.int64)


def save_samples_csv(path, features, labels):
    """Write (features, labels) in the load_samples_csv schema."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([CSV_LABEL_COLUMN] + [f"f{i}" for i in range(features.shape[1])])
        for y, row in zip(labels, features):
            writer.writerow([int(y)] + [repr(float(v)) for v in row])


def from_csv_files(paths, num_classes, seed, ratios=(7, 1, 2)) -> FederatedDataset:
    """Build a federation from one CSV per client, splitting each 7:1:2."""
    clients = []
    feature_dim = None
    for m, path in enumerate(paths):
        features, labels = load_samples_csv(path, num_classes)
        if feature_dim is None:
            feature_dim = features.shape[1]
        elif features.shape[1] != feature_dim:
            raise CsvSchemaError(
                f"{path}: feature count {features.shape[1]} differs from first client's {feature_dim}")
        clients.append(split(features, labels, ratios, rng=stream(seed, NS_SPLIT, m)))
    if not clients:
        raise ConfigurationError("need at least one client CSV")
    return FederatedDataset(tuple(clients), num_classes, feature_dim)
