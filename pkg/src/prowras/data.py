"""Dataset container, CSV I/O, min-max normalization and stratified splitting."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus binary labels with a declared minority label.

    Labels are kept as strings (whatever the CSV contained).
    """

    features: np.ndarray
    labels: np.ndarray
    minority_label: str
    feature_names: tuple[str, ...] | None = None
    label_name: str = "label"
    # oversampled training sets may overshoot balance by a few points
    allow_minority_surplus: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        y = np.asarray(self.labels).astype(str)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[1] < 1:
            raise DataError("at least one feature column is required")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        classes = np.unique(y)
        if len(classes) != 2:
            raise DataError(f"expected exactly 2 classes, found {len(classes)}")
        minority = str(self.minority_label)
        if minority not in classes:
            raise DataError(f"minority label {minority!r} not present")
        n_min = int(np.sum(y == minority))
        if n_min > y.shape[0] - n_min and not self.allow_minority_surplus:
            raise DataError(
                f"minority label {minority!r} has {n_min} samples, more than the "
                f"majority's {y.shape[0] - n_min}"
            )
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "minority_label", minority)
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != X.shape[1]:
                raise DataError("feature_names length does not match n_feats")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_feats(self) -> int:
        return self.features.shape[1]

    @property
    def majority_label(self) -> str:
        return str(next(c for c in np.unique(self.labels) if c != self.minority_label))

    @property
    def minority_mask(self) -> np.ndarray:
        return self.labels == self.minority_label

    @property
    def minority_indices(self) -> np.ndarray:
        return np.flatnonzero(self.minority_mask)

    @property
    def majority_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.minority_mask)

    @property
    def n_minority(self) -> int:
        return int(self.minority_mask.sum())

    @property
    def n_majority(self) -> int:
        return self.n_samples - self.n_minority

    @property
    def minority_points(self) -> np.ndarray:
        return self.features[self.minority_mask]

    @property
    def majority_points(self) -> np.ndarray:
        return self.features[~self.minority_mask]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.minority_label,
                       self.feature_names, self.label_name)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.minority_label,
                       self.feature_names, self.label_name)

    def augment(self, points: np.ndarray) -> "Dataset":
        """Append ``points`` as extra minority samples."""
        points = np.asarray(points, dtype=float).reshape(-1, self.n_feats)
        labels = np.concatenate([self.labels, np.full(len(points), self.minority_label)])
        return Dataset(np.vstack([self.features, points]), labels, self.minority_label,
                       self.feature_names, self.label_name, allow_minority_surplus=True)


def load_csv(path, label_column: str | int = -1, minority_label: str | None = None) -> Dataset:
    """Read a headed, comma-separated file into a :class:`Dataset`.

    ``label_column`` is a header name or a 0-based index (negative indices
    count from the end). Without ``minority_label`` the rarer class is used.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if isinstance(label_column, str) and label_column not in header:
        try:
            label_column = int(label_column)
        except ValueError:
            raise DataError(f"{path}: no column named {label_column!r}") from None
    if isinstance(label_column, str):
        col = header.index(label_column)
    else:
        col = label_column if label_column >= 0 else len(header) + label_column
        if not 0 <= col < len(header):
            raise DataError(f"{path}: label column index {label_column} out of range")
    if not rows:
        raise DataError(f"{path}: no data rows")

    feats = np.empty((len(rows), len(header) - 1))
    labels = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        j_out = 0
        for j, cell in enumerate(row):
            if j == col:
                labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at row {i + 2}, column {j + 1} ({header[j]})"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"{path}: non-finite value at row {i + 2}, column {j + 1}")
            feats[i, j_out] = v
            j_out += 1

    y = np.array(labels, dtype=str)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise DataError(f"{path}: label column has {len(classes)} distinct values, expected 2")
    if minority_label is None:
        # ties resolve to the lexicographically first label
        minority_label = str(classes[np.argmin(counts)])
    names = tuple(h for j, h in enumerate(header) if j != col)
    return Dataset(feats, y, minority_label, names, header[col])


def write_csv(path, d: Dataset) -> None:
    """Write ``d`` with the label as the last column; floats round-trip exactly."""
    names = d.feature_names or tuple(f"x{j}" for j in range(d.n_feats))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, d.label_name])
        for row, label in zip(d.features, d.labels):
            w.writerow([repr(float(v)) for v in row] + [label])


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: str
    label_column: str | int = -1
    minority_label: str | None = None

    def load(self) -> Dataset:
        return load_csv(self.path, self.label_column, self.minority_label)


def load_manifest(path) -> list[DatasetEntry]:
    """Read a JSON list of ``{name, path, label_column, minority_label}``.

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    return [parse_entry(item, path.parent) for item in raw]


def parse_entry(item: dict, base: Path | None = None) -> DatasetEntry:
    p = Path(item["path"])
    if base is not None and not p.is_absolute():
        p = base / p
    return DatasetEntry(
        name=item.get("name", p.stem),
        path=str(p),
        label_column=item.get("label_column", -1),
        minority_label=item.get("minority_label"),
    )


# --- normalization -----------------------------------------------------------

@dataclass(frozen=True)
class Normalizer:
    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - self.mins) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * (self.maxs - self.mins) + self.mins


def fit_normalizer(train: Dataset) -> Normalizer:
    if train.n_samples == 0:
        raise DataError("cannot fit a normalizer on an empty dataset")
    return Normalizer(train.features.min(axis=0), train.features.max(axis=0))


def apply_normalizer(norm: Normalizer, d: Dataset) -> Dataset:
    return d.with_features(norm.transform(d.features))


# --- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    """Fold assignments for repeated stratified k-fold CV.

    ``assignments[r][i]`` is the test fold of sample ``i`` in repeat ``r``.
    """

    repeats: int
    folds: int
    assignments: tuple[np.ndarray, ...]
    seed: int

    def splits(self) -> Iterator[tuple[int, int, np.ndarray, np.ndarray]]:
        """Yield ``(repeat, fold, train_idx, test_idx)`` in canonical order."""
        for r, assign in enumerate(self.assignments):
            for f in range(self.folds):
                yield r, f, np.flatnonzero(assign != f), np.flatnonzero(assign == f)


def stratified_folds(d: Dataset, repeats: int = 5, folds: int = 5, seed: int = 0) -> FoldPlan:
    """Repeated stratified k-fold assignment.

    Each class is shuffled and dealt round-robin over the folds; the majority
    class continues dealing where the minority class stopped, which keeps
    total fold sizes within one of each other.
    """
    if repeats < 1 or folds < 2:
        raise DataError("need repeats >= 1 and folds >= 2")
    if folds > d.n_minority:
        raise DataError(f"{folds} folds but only {d.n_minority} minority samples")
    children = np.random.SeedSequence(seed).spawn(repeats)
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        assign = np.empty(d.n_samples, dtype=int)
        offset = 0
        for idx in (d.minority_indices, d.majority_indices):
            perm = rng.permutation(idx)
            assign[perm] = (offset + np.arange(len(perm))) % folds
            offset = (offset + len(perm)) % folds
        assign.setflags(write=False)
        out.append(assign)
    return FoldPlan(repeats, folds, tuple(out), seed)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def selection_indices(d: Dataset, train_frac: float = 0.5, test_frac: float = 0.2,
                      seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint class-stratified index subsets of the requested fractions."""
    if train_frac <= 0 or test_frac <= 0 or train_frac + test_frac > 1:
        raise DataError("fractions must be positive and sum to at most 1")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for idx, is_min in ((d.minority_indices, True), (d.majority_indices, False)):
        n = len(idx)
        n_train = _round_half_up(n * train_frac)
        n_test = _round_half_up(n * test_frac)
        if is_min:
            n_train, n_test = max(n_train, 1), max(n_test, 1)
        if n_train + n_test > n:
            raise DataError(f"minority class of {n} samples is too small to stratify")
        perm = rng.permutation(idx)
        train.append(perm[:n_train])
        test.append(perm[n_train:n_train + n_test])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def selection_split(d: Dataset, train_frac: float = 0.5, test_frac: float = 0.2,
                    seed: int = 0) -> tuple[Dataset, Dataset]:
    train, test = selection_indices(d, train_frac, test_frac, seed)
    return d.subset(train), d.subset(test)
