"""Synthetic multi-modal benchmark generator.

Each class is a mixture of a few Gaussian modes around a class mean on a
fixed-radius sphere. The mode structure is what clustering-aware selection
can exploit and uniform sampling cannot: with modes spread wider than the
point noise, a budget that misses a mode strands that mode's test items far
from the class centroid. All draws come from streams derived per class and
purpose, which makes the train split a pure function of the spec minus
test_seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import EmbeddingSet
from .linalg import derive_stream

# stream id bases; class id is added so every (purpose, class) pair is distinct
_S_MEAN = 1_000_000
_S_MODE = 2_000_000
_S_TRAIN = 3_000_000
_S_TEST = 4_000_000


@dataclass
class BenchmarkSpec:
    num_classes: int = 10
    per_class: int = 100
    dim: int = 64
    modes_per_class: int = 4
    class_separation: float = 6.0  # radius of the sphere class means live on
    mode_spread: float = 1.5       # per-coordinate std of mode offsets
    noise_sigma: float = 1.0       # per-coordinate std of item noise
    test_per_class: int = 50
    seed: int = 0
    test_seed: int | None = None   # None = same as seed; only affects test noise

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (1 <= self.modes_per_class <= self.per_class):
            raise ValueError("modes_per_class must be in [1, per_class]")
        if self.test_per_class < 1:
            raise ValueError("test_per_class must be >= 1")
        for name in ("class_separation", "mode_spread", "noise_sigma"):
            if not (getattr(self, name) >= 0):
                raise ValueError(f"{name} must be >= 0")
        if self.seed < 0 or (self.test_seed is not None and self.test_seed < 0):
            raise ValueError("seeds must be >= 0")


def _class_geometry(spec: BenchmarkSpec, c: int) -> tuple[np.ndarray, np.ndarray]:
    g = derive_stream(spec.seed, _S_MEAN + c).standard_normal(spec.dim)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:  # measure-zero draw; still deterministic
        g = np.zeros(spec.dim)
        g[0] = 1.0
        norm = 1.0
    mean = spec.class_separation * g / norm
    offsets = spec.mode_spread * derive_stream(spec.seed, _S_MODE + c).standard_normal(
        (spec.modes_per_class, spec.dim)
    )
    return mean, offsets


def _sample_split(
    spec: BenchmarkSpec, c: int, count: int, noise_seed: int, stream_base: int
) -> np.ndarray:
    mean, offsets = _class_geometry(spec, c)
    noise = derive_stream(noise_seed, stream_base + c).standard_normal((count, spec.dim))
    modes = np.arange(count) % spec.modes_per_class
    X = mean[None, :] + offsets[modes] + spec.noise_sigma * noise
    # quantize so in-memory arrays match a file round trip bit for bit
    return X.astype(np.float32)


def class_mixture_mean(spec: BenchmarkSpec, c: int, count: int) -> np.ndarray:
    """Exact expected class mean under round-robin mode assignment of count
    items; the reference point for sample-mean convergence checks."""
    mean, offsets = _class_geometry(spec, c)
    modes = np.arange(count) % spec.modes_per_class
    return mean + offsets[modes].mean(axis=0)


def gen_benchmark(spec: BenchmarkSpec) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Generate (train, test) pools; regenerating is bit-identical.

    The test split draws its noise from test_seed when given, so test can be
    resampled without touching a single train byte. Class means and mode
    offsets always come from the main seed, keeping both splits on the same
    mixture.
    """
    train_blocks = []
    test_blocks = []
    train_labels = []
    test_labels = []
    tseed = spec.seed if spec.test_seed is None else spec.test_seed
    for c in range(spec.num_classes):
        train_blocks.append(_sample_split(spec, c, spec.per_class, spec.seed, _S_TRAIN))
        train_labels.append(np.full(spec.per_class, c, dtype=np.int64))
        test_blocks.append(_sample_split(spec, c, spec.test_per_class, tseed, _S_TEST))
        test_labels.append(np.full(spec.test_per_class, c, dtype=np.int64))
    train = EmbeddingSet(
        X=np.concatenate(train_blocks),
        labels=np.concatenate(train_labels),
        num_classes=spec.num_classes,
    )
    test = EmbeddingSet(
        X=np.concatenate(test_blocks),
        labels=np.concatenate(test_labels),
        num_classes=spec.num_classes,
    )
    return train, test
