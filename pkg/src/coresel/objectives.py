"""Selection objectives over a single class pool.

Both losses see the full class pool X (N rows) and an index set S into it.
diversity_loss averages pairwise cosine similarity inside S over ordered
distinct pairs, so lower means the picked items point in more different
directions. representativeness_loss is exp(-mean_t min_{i in S} ||x_t - x_i||),
which is large (near 1) when every pool item sits close to some picked item.
The combined objective is minimized, so the representativeness term enters
with a negative sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import cosine_similarity, derive_stream, sample_without_replacement, sq_distance_matrix


@dataclass(frozen=True)
class ObjectiveWeights:
    lambda_d: float
    lambda_r: float

    def __post_init__(self):
        for name in ("lambda_d", "lambda_r"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")


def _check_selection(X: np.ndarray, selected, min_size: int) -> np.ndarray:
    sel = np.asarray(selected, dtype=np.int64)
    if sel.ndim != 1:
        raise ValueError("selected must be a 1-d index array")
    if sel.size < min_size:
        raise ValueError(f"need at least {min_size} selected items, got {sel.size}")
    if sel.size and (sel.min() < 0 or sel.max() >= X.shape[0]):
        raise ValueError("selected index out of range")
    if len(set(sel.tolist())) != sel.size:
        raise ValueError("selected indices must be distinct")
    return sel


def diversity_loss(X, selected) -> float:
    """Mean pairwise cosine similarity over ordered distinct pairs of S.

    Needs at least 2 selected items. Raises on a zero-norm selected vector,
    where cosine is undefined.
    """
    X = np.asarray(X, dtype=np.float64)
    sel = _check_selection(X, selected, min_size=2)
    m = sel.size
    total = 0.0
    for t in range(m):
        for i in range(m):
            if i == t:
                continue
            total += cosine_similarity(X[sel[t]], X[sel[i]])
    return total / (m * (m - 1))


def representativeness_loss(X, selected) -> float:
    """exp(-average over the pool of the distance to the nearest selected item).

    Close to 1 when S covers the pool well, falls toward 0 as pool items get
    stranded far from every selected item. Needs at least 1 selected item.
    """
    X = np.asarray(X, dtype=np.float64)
    sel = _check_selection(X, selected, min_size=1)
    # direct differences, one pass per selected item: the expanded
    # ||x||^2 + ||y||^2 - 2xy form loses ~1e-9 on self-distances
    nearest2 = np.full(X.shape[0], np.inf)
    for i in sel:
        np.minimum(nearest2, ((X - X[i]) ** 2).sum(axis=1), out=nearest2)
    return float(np.exp(-np.sqrt(nearest2).mean()))


def combined_objective(X, selected, weights: ObjectiveWeights) -> float:
    """lambda_d * diversity - lambda_r * representativeness, to be minimized.

    With lambda_d == 0 the diversity term is skipped entirely, so singleton
    selections are valid there; with lambda_d > 0 a singleton raises.
    """
    X = np.asarray(X, dtype=np.float64)
    sel = _check_selection(X, selected, min_size=1)
    value = 0.0
    if weights.lambda_d != 0.0:
        value += weights.lambda_d * diversity_loss(X, sel)
    if weights.lambda_r != 0.0:
        value -= weights.lambda_r * representativeness_loss(X, sel)
    return value


def median_heuristic(Z) -> float:
    """RBF bandwidth gamma = 1 / (2 m^2), m the median pairwise distance.

    Pools larger than 256 rows are subsampled with a fixed internal stream
    keyed by the row count, so the result is a pure function of the input.
    Raises if the median distance is zero (kernel width would degenerate).
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    n = Z.shape[0]
    if n > 256:
        rng = derive_stream(216, n)
        idx = np.sort(sample_without_replacement(rng, n, 256))
        Z = Z[idx]
        n = 256
    d2 = sq_distance_matrix(Z, Z)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(d2[iu])))
    if med <= 0.0:
        raise ValueError("median pairwise distance is zero")
    return 1.0 / (2.0 * med * med)


def mmd2_unbiased(X, Y, gamma: float) -> float:
    """Unbiased squared maximum mean discrepancy under an RBF kernel.

    k(x, y) = exp(-gamma ||x - y||^2). Diagonal terms are excluded from the
    within-set sums, so the estimate can go negative; both sets need >= 2
    rows for the unbiased form to exist.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must be 2-d with matching dimension")
    m, n = X.shape[0], Y.shape[0]
    if m < 2 or n < 2:
        raise ValueError("need at least 2 rows on each side")
    if not (gamma > 0):
        raise ValueError("gamma must be positive")
    Kxx = np.exp(-gamma * sq_distance_matrix(X, X))
    Kyy = np.exp(-gamma * sq_distance_matrix(Y, Y))
    Kxy = np.exp(-gamma * sq_distance_matrix(X, Y))
    sx = (Kxx.sum() - np.trace(Kxx)) / (m * (m - 1))
    sy = (Kyy.sum() - np.trace(Kyy)) / (n * (n - 1))
    return float(sx + sy - 2.0 * Kxy.mean())
