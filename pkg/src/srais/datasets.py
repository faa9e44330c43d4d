"""Loading and preparing labeled data for the logistic regression target.

Expected file format: delimited text with 22 numeric columns, the first
21 being features and the last a class in {0, 1, 2}, optionally preceded
by a header row. A small synthetic fixture in the classic three-wave
style ships with the package so the pipeline runs without external data.
"""

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

N_FEATURES = 21
_CLASSES = (0, 1, 2)

BUILTIN_NAME = "builtin:waveform-synthetic"


@dataclass
class LabeledDataset:
    """Standardized train/test split with labels in {-1, +1}.

    Features are standardized per column using statistics of the training
    split only; the same transform is applied to the test split.
    """

    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    feature_means: np.ndarray
    feature_stds: np.ndarray
    source: str
    binarization: str
    train_fraction: float
    n_rows: int

    @property
    def n_features(self):
        return self.train_features.shape[1]

    @property
    def majority_accuracy(self):
        """Accuracy of always predicting the most common test label."""
        pos = float(np.mean(self.test_labels == 1.0))
        return max(pos, 1.0 - pos)


def _parse_positive_class(binarization):
    parts = binarization.split("-")
    if len(parts) == 3 and parts[1] == "vs" and parts[2] == "rest":
        try:
            cls = int(parts[0])
        except ValueError:
            cls = None
        if cls in _CLASSES:
            return cls
    raise ValueError(
        f"unknown binarization {binarization!r}; expected one of "
        + ", ".join(f"'{c}-vs-rest'" for c in _CLASSES)
    )


def _read_rows(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                if i == 0:
                    continue  # header row
                raise ValueError(f"{path}: non-numeric value on line {i + 1}") from exc
            if len(values) != N_FEATURES + 1:
                raise ValueError(
                    f"{path}: line {i + 1} has {len(values)} columns, expected {N_FEATURES + 1}"
                )
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def synthetic_fixture_path():
    """Path of the bundled synthetic waveform-style CSV."""
    return Path(resources.files("srais").joinpath("data/waveform_synthetic.csv"))


def load_dataset(path, *, binarization="0-vs-rest", train_fraction=0.8, seed=0):
    """Read, binarize, split, and standardize a waveform-format file.

    Parameters
    ----------
    path : str or Path
        File path, or ``"builtin:waveform-synthetic"`` for the bundled fixture.
    binarization : str
        ``"c-vs-rest"`` maps class c to +1 and the rest to -1.
    train_fraction : float in (0, 1)
    seed : int
        Drives the shuffled split; identical seeds give identical splits.
    """
    positive = _parse_positive_class(binarization)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    source = str(path)
    if source == BUILTIN_NAME:
        path = synthetic_fixture_path()
    data = _read_rows(path)
    classes = data[:, -1]
    if not np.all(np.isin(classes, _CLASSES)):
        bad = sorted(set(classes[~np.isin(classes, _CLASSES)]))
        raise ValueError(f"unknown class values {bad}; expected {_CLASSES}")
    features = data[:, :-1]
    labels = np.where(classes == positive, 1.0, -1.0)

    n = features.shape[0]
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(f"train_fraction {train_fraction} leaves an empty split for {n} rows")
    order = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = order[:n_train], order[n_train:]

    means = features[train_idx].mean(axis=0)
    stds = features[train_idx].std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    standardized = (features - means) / stds

    return LabeledDataset(
        train_features=standardized[train_idx],
        train_labels=labels[train_idx],
        test_features=standardized[test_idx],
        test_labels=labels[test_idx],
        feature_means=means,
        feature_stds=stds,
        source=source,
        binarization=binarization,
        train_fraction=float(train_fraction),
        n_rows=n,
    )


def make_synthetic_waveform(n_rows, rng):
    """Generate waveform-style rows: noisy convex combinations of three
    triangular base waves sampled at 21 points.

    Returns ``(features, classes)`` with classes drawn uniformly from
    {0, 1, 2}. Each class mixes a different pair of base waves.
    """
    grid = np.arange(1, N_FEATURES + 1, dtype=float)
    waves = [np.maximum(6.0 - np.abs(grid - c), 0.0) for c in (7.0, 15.0, 11.0)]
    pairs = {0: (0, 1), 1: (0, 2), 2: (1, 2)}
    classes = rng.integers(0, 3, size=n_rows)
    u = rng.random(n_rows)
    noise = rng.standard_normal((n_rows, N_FEATURES))
    features = np.empty((n_rows, N_FEATURES))
    for cls, (a, b) in pairs.items():
        mask = classes == cls
        mix = u[mask, None]
        features[mask] = mix * waves[a] + (1.0 - mix) * waves[b]
    features += noise
    return features, classes.astype(float)


def write_waveform_csv(path, features, classes):
    """Write rows in the loadable format with a header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i:02d}" for i in range(1, N_FEATURES + 1)] + ["class"])
        for row, cls in zip(features, classes):
            writer.writerow([repr(float(v)) for v in row] + [str(int(cls))])
