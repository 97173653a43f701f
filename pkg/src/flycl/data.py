"""Datasets: labeled feature files and synthetic prototype tasks.

Feature file format (plain text, LF or CRLF line endings):

    d=<int>,k=<int>
    <label>,<v1>,...,<vd>
    ...

The header fixes the feature dimension d and the number of classes k.
Labels may be arbitrary integers; on load they are remapped to
contiguous ids 0..k-1 in ascending order of the original values and the
mapping is kept on the returned dataset. Values are decimal reals with
'.' as the separator and round-trip bit-exactly through save/load.

The synthetic task is a set of near-orthogonal unit prototypes with
round-robin class labels; items are prototypes plus spherical Gaussian
noise.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, FeatureFileError, InfeasibleError

_ATTEMPT_CAP = 1_000_000


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


@dataclass
class LabeledFeatureSet:
    """Feature rows with contiguous integer labels 0..k-1, every class nonempty."""

    features: np.ndarray  # (n_items, input_dim) float64
    labels: np.ndarray  # (n_items,) int64
    label_map: dict[int, int] | None = None  # original label -> contiguous id, if remapped

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DatasetError(f"features must be 2-d, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} feature rows"
            )
        if self.labels.size == 0:
            raise DatasetError("dataset is empty")
        present = np.unique(self.labels)
        expected = np.arange(present.size)
        if not np.array_equal(present, expected):
            raise DatasetError(
                f"labels must be contiguous 0..k-1 with every class present, found {present.tolist()}"
            )

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_items(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def class_indices(self, label: int) -> np.ndarray:
        """Row indices of one class, in dataset order."""
        return np.flatnonzero(self.labels == label)


def load_features(path: str | Path, shift_nonnegative: bool = False) -> LabeledFeatureSet:
    """Parse a feature file. Errors carry the 1-based line number.

    With shift_nonnegative=True each feature column is shifted by its
    own minimum so all values are >= 0 (useful because the sparse coder
    only fires on positive responses). For a train/test pair, prefer
    `shift_to_nonnegative` so both files use the training offsets.
    """
    path = Path(path)
    with open(path, "r", newline=None) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FeatureFileError("empty file, expected a d=<int>,k=<int> header", line=1)
    header = lines[0].strip()
    try:
        d_part, k_part = header.split(",")
        if not (d_part.startswith("d=") and k_part.startswith("k=")):
            raise ValueError
        dim = int(d_part[2:])
        n_classes = int(k_part[2:])
    except ValueError:
        raise FeatureFileError(f"malformed header {header!r}, expected d=<int>,k=<int>", line=1) from None
    if dim < 1 or n_classes < 1:
        raise FeatureFileError(f"header must declare d >= 1 and k >= 1, got {header!r}", line=1)

    raw_labels: list[int] = []
    rows: list[list[float]] = []
    for lineno, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue  # ignore blank lines, including a trailing newline
        parts = text.split(",")
        if len(parts) != dim + 1:
            raise FeatureFileError(
                f"expected 1 label + {dim} values, found {len(parts)} fields", line=lineno
            )
        try:
            raw_labels.append(int(parts[0]))
        except ValueError:
            raise FeatureFileError(f"bad label {parts[0]!r}", line=lineno) from None
        try:
            rows.append([float(tok) for tok in parts[1:]])
        except ValueError:
            raise FeatureFileError(f"bad feature value in row {text!r}", line=lineno) from None
    if not rows:
        raise FeatureFileError("no data rows after the header", line=2)

    originals = sorted(set(raw_labels))
    if len(originals) != n_classes:
        raise FeatureFileError(
            f"header declares k={n_classes} classes but {len(originals)} distinct labels appear"
        )
    label_map = {orig: i for i, orig in enumerate(originals)}
    features = np.array(rows, dtype=np.float64)
    labels = np.array([label_map[raw] for raw in raw_labels], dtype=np.int64)
    if shift_nonnegative:
        features = features - np.minimum(features.min(axis=0), 0.0)
    return LabeledFeatureSet(features, labels, label_map=label_map)


def save_features(dataset: LabeledFeatureSet, path: str | Path) -> None:
    """Write a dataset in the feature file format (LF endings, repr floats)."""
    out = [f"d={dataset.input_dim},k={dataset.n_classes}"]
    for label, row in zip(dataset.labels, dataset.features):
        out.append(f"{int(label)}," + ",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(out) + "\n")


def shift_to_nonnegative(train: LabeledFeatureSet, *others: LabeledFeatureSet) -> list[LabeledFeatureSet]:
    """Shift every set by the training set's per-column minima (clipped at 0)."""
    offset = np.minimum(train.features.min(axis=0), 0.0)
    shifted = []
    for ds in (train, *others):
        if ds.input_dim != train.input_dim:
            raise DatasetError(f"dimension mismatch: {ds.input_dim} vs {train.input_dim}")
        shifted.append(LabeledFeatureSet(ds.features - offset, ds.labels.copy(), label_map=ds.label_map))
    return shifted


@dataclass
class PrototypeSet:
    """Unit-norm class anchors with pairwise cosine at most separation.

    Labels are contiguous 0..n_classes-1, assigned round-robin so class
    sizes differ by at most one.
    """

    prototypes: np.ndarray  # (n_prototypes, input_dim) float64, unit rows
    labels: np.ndarray  # (n_prototypes,) int64
    separation: float

    def __post_init__(self):
        self.prototypes = np.asarray(self.prototypes, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        norms = np.linalg.norm(self.prototypes, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-9):
            raise DatasetError("prototypes must have unit norm (tolerance 1e-9)")
        worst = max_pairwise_cosine(self.prototypes)
        if worst > self.separation + 1e-12:
            raise DatasetError(
                f"pairwise cosine {worst:.6f} exceeds separation bound {self.separation}"
            )

    @property
    def n_prototypes(self) -> int:
        return self.prototypes.shape[0]

    @property
    def input_dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


def max_pairwise_cosine(vectors: np.ndarray) -> float:
    """Largest off-diagonal cosine; -inf for fewer than two vectors."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    if n < 2:
        return float("-inf")
    norms = np.linalg.norm(vectors, axis=1)
    gram = (vectors / norms[:, None]) @ (vectors / norms[:, None]).T
    np.fill_diagonal(gram, -np.inf)
    return float(gram.max())


def generate_prototypes(
    n_prototypes: int,
    input_dim: int,
    n_classes: int,
    separation: float,
    seed: int,
) -> PrototypeSet:
    """Rejection-sample unit prototypes with pairwise cosine <= separation.

    Labels are assigned round-robin (prototype i gets class i % n_classes).
    Raises InfeasibleError after 1e6 candidate draws, reporting the best
    cosine any rejected candidate achieved against the accepted set.
    """
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    if n_prototypes < n_classes:
        raise ValueError(
            f"need at least one prototype per class: n_prototypes={n_prototypes} < n_classes={n_classes}"
        )
    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}")
    if not -1.0 <= separation <= 1.0:
        raise ValueError(f"separation must be a cosine in [-1, 1], got {separation}")
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    best_rejected = float("inf")
    attempts = 0
    while len(accepted) < n_prototypes:
        if attempts >= _ATTEMPT_CAP:
            raise InfeasibleError(
                f"gave up after {attempts} draws with {len(accepted)}/{n_prototypes} prototypes "
                f"accepted; best rejected candidate had max cosine {best_rejected:.6f} > {separation}",
                best_cosine=best_rejected,
            )
        attempts += 1
        cand = rng.standard_normal(input_dim)
        norm = np.linalg.norm(cand)
        if norm == 0.0:
            continue
        cand /= norm
        if accepted:
            worst = float(np.max(np.stack(accepted) @ cand))
            if worst > separation:
                best_rejected = min(best_rejected, worst)
                continue
        accepted.append(cand)
    labels = np.arange(n_prototypes, dtype=np.int64) % n_classes
    return PrototypeSet(np.stack(accepted), labels, separation)


def sample_noisy(
    prototype_set: PrototypeSet,
    sigma: float,
    n_per_prototype: int,
    seed: int,
) -> LabeledFeatureSet:
    """Draw n_per_prototype noisy copies of each prototype.

    Items are grouped by prototype, in prototype order; each item is the
    prototype plus sigma times a standard normal vector.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if n_per_prototype < 1:
        raise ValueError(f"n_per_prototype must be >= 1, got {n_per_prototype}")
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for proto, label in zip(prototype_set.prototypes, prototype_set.labels):
        noise = rng.standard_normal((n_per_prototype, prototype_set.input_dim))
        blocks.append(proto + sigma * noise)
        labels.append(np.full(n_per_prototype, label, dtype=np.int64))
    return LabeledFeatureSet(np.vstack(blocks), np.concatenate(labels))
