"""In-memory embedding dataset container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EmbeddingSet:
    """A labeled pool of embedding vectors.

    X is (N, D) float32, labels is (N,) int64 with values in [0, C). The
    class count C is explicit so empty classes are representable.
    """

    X: np.ndarray
    labels: np.ndarray
    num_classes: int
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be (N, D)")
        if self.labels.shape != (self.X.shape[0],):
            raise ValueError("labels must be (N,)")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels out of range")
        if self.class_names and len(self.class_names) != self.num_classes:
            raise ValueError("class_names length must equal num_classes")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def class_indices(self, c: int) -> np.ndarray:
        """Row indices belonging to class c, ascending."""
        if not (0 <= c < self.num_classes):
            raise ValueError(f"class {c} out of range")
        return np.nonzero(self.labels == c)[0]

    def subset(self, indices) -> "EmbeddingSet":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingSet(
            X=self.X[idx],
            labels=self.labels[idx],
            num_classes=self.num_classes,
            class_names=list(self.class_names),
        )
