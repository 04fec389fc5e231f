"""Nearest-centroid evaluation harness with repeated-run summaries.

The classifier is deliberately simple and training-free so that metric
differences reflect the picked subsets rather than optimizer noise: fit is
a per-class mean, scores are a softmax over negative distances.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import EmbeddingSet
from .linalg import sq_distance_matrix
from .selection import SelectionConfig, SelectionResult, distill


@dataclass
class CentroidModel:
    centroids: np.ndarray   # (C, D), one row per class
    temperature: float = 1.0

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]


def fit_centroids(X, labels, num_classes: int, temperature: float = 1.0) -> CentroidModel:
    """Per-class mean vectors; every class must contribute at least one item."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise ValueError("X must be (N, D) with matching labels")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty set")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError("labels out of range")
    if not (temperature > 0):
        raise ValueError("temperature must be positive")
    C = np.zeros((num_classes, X.shape[1]))
    for c in range(num_classes):
        mask = labels == c
        if not mask.any():
            raise ValueError(f"class {c} has no training items")
        C[c] = X[mask].mean(axis=0)
    if not np.all(np.isfinite(C)):
        raise ValueError("non-finite centroid")
    return CentroidModel(centroids=C, temperature=temperature)


def predict_scores(model: CentroidModel, X) -> np.ndarray:
    """Class probabilities as softmax(-distance / temperature), shape (N, C).

    Rows sum to 1; ties in distance resolve to the lower class index at
    argmax time.
    """
    X = np.asarray(X, dtype=np.float64)
    d = np.sqrt(sq_distance_matrix(X, model.centroids))
    logits = -d / model.temperature
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return p


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("label arrays must be equal-length and non-empty")
    return float(np.mean(y_true == y_pred))


def macro_f1(y_true, y_pred, num_classes: int) -> float:
    """Unweighted mean of per-class F1 over all num_classes classes.

    A class with zero precision+recall (never predicted and never present,
    or always wrong) contributes 0, so missing classes pull the macro
    average down rather than being skipped.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("label arrays must be equal-length and non-empty")
    total = 0.0
    for c in range(num_classes):
        tp = float(np.sum((y_pred == c) & (y_true == c)))
        fp = float(np.sum((y_pred == c) & (y_true != c)))
        fn = float(np.sum((y_pred != c) & (y_true == c)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        total += 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    return total / num_classes


def _average_ranks(x: np.ndarray) -> np.ndarray:
    # 1-based ranks with ties sharing the average of their block
    order = np.argsort(x, kind="stable")
    sx = x[order]
    _, inv, counts = np.unique(sx, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    start = cum - counts
    avg = (start + cum - 1) / 2.0 + 1.0
    ranks = np.empty(x.shape[0])
    ranks[order] = avg[inv]
    return ranks


def macro_auc_ovr(y_true, scores, num_classes: int) -> float:
    """One-vs-rest AUC averaged over rankable classes.

    Per class the AUC is the Mann-Whitney statistic of that class's score
    column, with tied scores credited half, so no threshold sweep is needed.
    Classes missing either positives or negatives in y_true are skipped with
    a warning; raises if every class is skipped (nothing is rankable).
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (y_true.shape[0], num_classes):
        raise ValueError("scores must be (N, num_classes)")
    aucs = []
    for c in range(num_classes):
        pos = y_true == c
        n_pos = int(pos.sum())
        n_neg = y_true.shape[0] - n_pos
        if n_pos == 0 or n_neg == 0:
            warnings.warn(f"class {c} skipped in AUC: needs both positives and negatives")
            continue
        ranks = _average_ranks(scores[:, c])
        u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
        aucs.append(u / (n_pos * n_neg))
    if not aucs:
        raise ValueError("no class has both positives and negatives")
    return float(np.mean(aucs))


def evaluate_selection(
    train: EmbeddingSet, test: EmbeddingSet, indices, temperature: float = 1.0
) -> dict[str, float]:
    """Fit centroids on the given train rows and score the test set."""
    idx = np.asarray(indices, dtype=np.int64)
    model = fit_centroids(
        train.X[idx], train.labels[idx], train.num_classes, temperature=temperature
    )
    scores = predict_scores(model, test.X)
    y_pred = np.argmax(scores, axis=1)
    return {
        "acc": accuracy(test.labels, y_pred),
        "macro_f1": macro_f1(test.labels, y_pred, test.num_classes),
        "macro_auc": macro_auc_ovr(test.labels, scores, test.num_classes),
    }


METRIC_NAMES = ("acc", "macro_f1", "macro_auc")


@dataclass
class ExperimentResult:
    method: str
    vpc: int
    master_seed: int
    runs: int
    metrics: dict[str, np.ndarray]       # name -> (runs,) values
    reference: dict[str, float]          # whole-pool centroid baseline
    selections: list[SelectionResult] = field(default_factory=list)
    run_times: list[float] | None = None

    def mean_std(self, name: str) -> tuple[float, float]:
        v = self.metrics[name]
        mean = float(np.mean(v))
        std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        return mean, std


def run_experiment(
    train: EmbeddingSet,
    test: EmbeddingSet,
    config: SelectionConfig,
    scores=None,
    runs: int = 5,
    temperature: float = 1.0,
    collect_timings: bool = False,
) -> ExperimentResult:
    """Repeat select-then-evaluate with shifted master seeds.

    Run r uses master_seed + r, so the runs differ only through the
    selection streams. The reference entry evaluates centroids fit on the
    entire training pool, an upper line the subset methods chase.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    per_metric: dict[str, list[float]] = {m: [] for m in METRIC_NAMES}
    selections: list[SelectionResult] = []
    run_times: list[float] = []
    for r in range(runs):
        t0 = time.perf_counter() if collect_timings else 0.0
        cfg = SelectionConfig(
            method=config.method,
            vpc=config.vpc,
            weights=config.weights,
            pca_dims=config.pca_dims,
            birch_threshold_scale=config.birch_threshold_scale,
            birch_branching=config.birch_branching,
            master_seed=config.master_seed + r,
            local_search_max_sweeps=config.local_search_max_sweeps,
        )
        sel = distill(train, cfg, scores=scores, collect_timings=collect_timings)
        selections.append(sel)
        vals = evaluate_selection(train, test, sel.indices, temperature=temperature)
        for m in METRIC_NAMES:
            per_metric[m].append(vals[m])
        if collect_timings:
            run_times.append(time.perf_counter() - t0)
    reference = evaluate_selection(
        train, test, np.arange(train.n, dtype=np.int64), temperature=temperature
    )
    return ExperimentResult(
        method=config.method,
        vpc=config.vpc,
        master_seed=config.master_seed,
        runs=runs,
        metrics={m: np.array(per_metric[m]) for m in METRIC_NAMES},
        reference=reference,
        selections=selections,
        run_times=run_times if collect_timings else None,
    )
