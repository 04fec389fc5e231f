"""Per-class coreset selection strategies and the driver that runs them.

Every strategy sees one class pool at a time and returns local row indices,
always min(vpc, pool size) of them, distinct and sorted. The driver hands
each class its own derived random stream, so results do not depend on class
processing order or thread count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .birch import CFTree, LeafEntry, cf_from_point, global_cluster, weighted_kmeans
from .dataset import EmbeddingSet
from .linalg import derive_stream, pca_fit, pca_transform, sample_without_replacement, sq_distance_matrix
from .objectives import ObjectiveWeights, combined_objective, median_heuristic

METHODS = ("random", "top_score", "knapsack", "tacdt", "greedy_objective", "kmeans_mmd")

# local-search swaps must beat the incumbent by more than this
SWAP_EPS = 1e-12


def weights_for_vpc(vpc: int) -> ObjectiveWeights:
    """Default objective weights by selection budget.

    A budget of one item has no pairwise diversity to speak of, so the
    diversity weight is zero there and the representativeness pull is kept
    gentle; larger budgets flip the emphasis.
    """
    if vpc < 1:
        raise ValueError("vpc must be >= 1")
    if vpc == 1:
        return ObjectiveWeights(lambda_d=0.0, lambda_r=0.1)
    return ObjectiveWeights(lambda_d=0.1, lambda_r=1.0)


@dataclass
class SelectionConfig:
    method: str
    vpc: int
    weights: ObjectiveWeights | None = None  # None = schedule by vpc
    pca_dims: int = 32
    birch_threshold_scale: float = 0.5
    birch_branching: int = 50
    master_seed: int = 0
    local_search_max_sweeps: int = 20

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.vpc < 1:
            raise ValueError("vpc must be >= 1")
        if self.pca_dims < 1:
            raise ValueError("pca_dims must be >= 1")
        if not (self.birch_threshold_scale > 0):
            raise ValueError("birch_threshold_scale must be positive")
        if self.birch_branching < 2:
            raise ValueError("birch_branching must be >= 2")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")
        if self.local_search_max_sweeps < 0:
            raise ValueError("local_search_max_sweeps must be >= 0")

    def effective_weights(self) -> ObjectiveWeights:
        w = self.weights if self.weights is not None else weights_for_vpc(self.vpc)
        if self.vpc == 1 and w.lambda_d != 0.0:
            # pairwise diversity needs at least two picks
            w = ObjectiveWeights(lambda_d=0.0, lambda_r=w.lambda_r)
        return w


@dataclass
class SelectionResult:
    per_class: list[np.ndarray]       # global row indices per class, ascending
    objectives: list[float]           # combined objective per class (nan if undefined)
    method: str
    vpc: int
    wall_time: list[float] | None = None  # per-class seconds, only when timed

    @property
    def indices(self) -> np.ndarray:
        """All selected rows across classes, ascending."""
        if not self.per_class:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate([np.asarray(p, dtype=np.int64) for p in self.per_class]))


def select_random(X, vpc: int, rng) -> np.ndarray:
    """Uniform sample without replacement, returned in draw order.

    A budget covering the whole pool still shuffles: the result is the full
    permutation, not the identity.
    """
    n = np.asarray(X).shape[0]
    return sample_without_replacement(rng, n, min(vpc, n))


def select_top_score(X, scores, vpc: int) -> np.ndarray:
    """The vpc highest-scoring items, descending; ties keep the earlier index."""
    n = np.asarray(X).shape[0]
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (n,):
        raise ValueError(f"scores must have shape ({n},)")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    k = min(vpc, n)
    order = np.argsort(-scores, kind="stable")
    return order[:k].astype(np.int64)


def select_knapsack(values, costs, capacity: int) -> np.ndarray:
    """0/1 knapsack by dynamic programming, exact.

    Maximizes total value, then item count, and the backtrace prefers
    exclusion at higher indices, so among tied sets the one whose largest
    index is smallest wins.
    The count tie-break keeps the unit-cost reduction equal to a stable
    top-k even when zero-valued items would otherwise be dropped as
    worthless.
    """
    values = np.asarray(values, dtype=np.float64)
    costs = np.asarray(costs, dtype=np.int64)
    n = values.shape[0]
    if costs.shape != (n,):
        raise ValueError("values and costs must have equal length")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("values must be finite and non-negative")
    if np.any(costs < 1):
        raise ValueError("costs must be positive integers")
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    val = np.zeros((n + 1, capacity + 1))
    cnt = np.zeros((n + 1, capacity + 1), dtype=np.int64)
    for i in range(1, n + 1):
        c = int(costs[i - 1])
        v = values[i - 1]
        val[i] = val[i - 1]
        cnt[i] = cnt[i - 1]
        if c <= capacity:
            tv = val[i - 1][: capacity + 1 - c] + v
            tc = cnt[i - 1][: capacity + 1 - c] + 1
            kv = val[i - 1][c:]
            kc = cnt[i - 1][c:]
            better = (tv > kv) | ((tv == kv) & (tc > kc))
            val[i][c:] = np.where(better, tv, kv)
            cnt[i][c:] = np.where(better, tc, kc)
    take = []
    w = capacity
    for i in range(n, 0, -1):
        if val[i][w] != val[i - 1][w] or cnt[i][w] != cnt[i - 1][w]:
            take.append(i - 1)
            w -= int(costs[i - 1])
    return np.array(sorted(take), dtype=np.int64)


def _pad_topk(selected: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    # fill unused budget with the best remaining scores, stable order
    if selected.size >= k:
        return selected
    have = set(selected.tolist())
    order = np.argsort(-scores, kind="stable")
    extra = [int(i) for i in order if int(i) not in have][: k - selected.size]
    return np.sort(np.concatenate([selected, np.array(extra, dtype=np.int64)]))


def select_tacdt(
    X,
    vpc: int,
    rng,
    pca_dims: int = 32,
    threshold_scale: float = 0.5,
    branching: int = 50,
) -> np.ndarray:
    """Training-free pipeline: PCA, CF-tree condensation, global clustering.

    The pool is projected to at most pca_dims components, condensed into CF
    leaf entries under a data-scaled threshold, the entries are clustered
    into vpc groups weighted by their sizes, and each group contributes the
    member nearest its centroid. If the tree comes out coarser than vpc the
    threshold is halved and the tree rebuilt, up to 8 times; any budget still
    unfilled (a pool of near-duplicates) is topped up farthest-point style.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if vpc >= n:
        return np.arange(n, dtype=np.int64)

    k_pca = min(pca_dims, n - 1, X.shape[1])
    if k_pca >= 1 and X.shape[1] > k_pca:
        Z = pca_transform(pca_fit(X, k_pca), X)
    else:
        # no reduction needed, but still center: CF radii and pairwise
        # distances keep full precision near the origin, which is what makes
        # the output hold still under a global translation of the pool
        Z = X - X.mean(axis=0)

    if n > 512:
        sample = Z[np.sort(sample_without_replacement(rng, n, 512))]
    else:
        sample = Z
    d2 = sq_distance_matrix(sample, sample)
    iu = np.triu_indices(sample.shape[0], k=1)
    median = float(np.median(np.sqrt(d2[iu]))) if iu[0].size else 0.0
    threshold = threshold_scale * median
    if not np.isfinite(threshold) or threshold <= 0.0:
        threshold = 1e-12

    entries = []
    for _ in range(9):
        tree = CFTree(threshold=threshold, branching_factor=branching)
        for i in range(n):
            tree.insert(Z[i], i)
        entries = tree.leaf_entries()
        if len(entries) >= vpc:
            break
        threshold = threshold / 2.0
    if len(entries) < vpc:
        # halving cannot separate exact duplicates; fall back to one entry
        # per item so the global stage still sees vpc things to cluster
        entries = [LeafEntry(cf_from_point(Z[i]), [i]) for i in range(n)]

    k_clusters = min(vpc, len(entries))
    gc = global_cluster(entries, k_clusters, rng)

    reps: list[int] = []
    for j in range(gc.centroids.shape[0]):
        members: list[int] = []
        for e_idx in np.nonzero(gc.assignments == j)[0]:
            members.extend(entries[int(e_idx)].members)
        members_arr = np.array(sorted(members), dtype=np.int64)
        d = np.sum((Z[members_arr] - gc.centroids[j]) ** 2, axis=1)
        reps.append(int(members_arr[_argmin_tied(d)]))

    chosen = np.array(sorted(set(reps)), dtype=np.int64)
    if chosen.size < vpc:
        chosen = _pad_farthest(Z, chosen, vpc - chosen.size)
    return np.sort(chosen)


def _argmin_tied(d: np.ndarray) -> int:
    # lowest position whose value ties the minimum. A cluster of two points
    # puts its centroid at their exact midpoint, so both distances agree
    # mathematically and differ only in rounding; a bare argmin would let
    # that last bit pick the winner
    dmin = float(d.min())
    tol = 1e-9 * (1.0 + abs(dmin))
    return int(np.nonzero(d <= dmin + tol)[0][0])


def _pad_farthest(Z: np.ndarray, chosen: np.ndarray, need: int) -> np.ndarray:
    # top up a short selection with the points farthest from what is already
    # picked, one at a time; ties fall to the lowest index via argmax
    n = Z.shape[0]
    picked = list(chosen.tolist())
    mind = np.sqrt(sq_distance_matrix(Z, Z[np.array(picked, dtype=np.int64)])).min(axis=1)
    for _ in range(need):
        mind[np.array(picked, dtype=np.int64)] = -1.0
        nxt = int(np.argmax(mind))
        picked.append(nxt)
        mind = np.minimum(mind, np.sqrt(np.sum((Z - Z[nxt]) ** 2, axis=1)))
    return np.array(sorted(picked), dtype=np.int64)


def _unit_rows(X: np.ndarray) -> np.ndarray:
    # rows scaled to unit norm; zero rows stay zero and contribute cosine 0,
    # the optimizers accept any pool while the public ops stay strict
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return X / safe[:, None]


def select_greedy_objective(
    X,
    vpc: int,
    weights: ObjectiveWeights,
    max_sweeps: int = 20,
) -> np.ndarray:
    """Greedy forward selection on the combined objective, then swap repair.

    Each forward step adds the candidate whose inclusion gives the lowest
    objective; the repair phase scans selected slots in pick order against
    all outside candidates in index order and applies the first swap that
    improves the objective by more than SWAP_EPS, one swap per sweep. When
    no single swap improves, one sweep tries exchanging two selected items
    for two outside candidates before giving up: single-swap descent alone
    parks in local optima that sit well above the true optimum on small
    instances, and for vpc=2 the pair move makes the search exhaustive.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if vpc >= n:
        return np.arange(n, dtype=np.int64)

    D = np.sqrt(sq_distance_matrix(X, X))
    Xu = _unit_rows(X)
    CS = np.clip(Xu @ Xu.T, -1.0, 1.0)
    lam_d, lam_r = weights.lambda_d, weights.lambda_r

    def objective(sel: np.ndarray) -> float:
        m = sel.size
        val = 0.0
        if lam_d != 0.0 and m >= 2:
            sub = CS[np.ix_(sel, sel)]
            val += lam_d * (sub.sum() - np.trace(sub)) / (m * (m - 1))
        if lam_r != 0.0:
            val -= lam_r * float(np.exp(-D[:, sel].min(axis=1).mean()))
        return val

    selected: list[int] = []
    in_set = np.zeros(n, dtype=bool)
    cur_min = np.full(n, np.inf)
    for step in range(vpc):
        cand = np.nonzero(~in_set)[0]
        m_new = step + 1
        new_min = np.minimum(cur_min[:, None], D[:, cand])
        rep = np.exp(-new_min.mean(axis=0))
        obj = -lam_r * rep
        if lam_d != 0.0 and m_new >= 2:
            sel_arr = np.array(selected, dtype=np.int64)
            base = CS[np.ix_(sel_arr, sel_arr)]
            base_sum = base.sum() - np.trace(base)
            cross = CS[np.ix_(cand, sel_arr)].sum(axis=1)
            obj = obj + lam_d * (base_sum + 2.0 * cross) / (m_new * (m_new - 1))
        pick = cand[int(np.argmin(obj))]
        selected.append(int(pick))
        in_set[pick] = True
        cur_min = np.minimum(cur_min, D[:, pick])

    cur_obj = objective(np.array(selected, dtype=np.int64))
    m = len(selected)

    def single_swap() -> float | None:
        nonlocal cur_obj
        for pos in range(m):
            keep = np.array([s for i, s in enumerate(selected) if i != pos], dtype=np.int64)
            cand = np.nonzero(~in_set)[0]
            base_min = (
                D[:, keep].min(axis=1) if keep.size else np.full(n, np.inf)
            )
            new_min = np.minimum(base_min[:, None], D[:, cand])
            obj = -lam_r * np.exp(-new_min.mean(axis=0))
            if lam_d != 0.0 and m >= 2:
                sub = CS[np.ix_(keep, keep)]
                base_sum = sub.sum() - np.trace(sub)
                cross = CS[np.ix_(cand, keep)].sum(axis=1)
                obj = obj + lam_d * (base_sum + 2.0 * cross) / (m * (m - 1))
            better = np.nonzero(cur_obj - obj > SWAP_EPS)[0]
            if better.size:
                j = int(better[0])
                out = selected[pos]
                selected[pos] = int(cand[j])
                in_set[out] = False
                in_set[cand[j]] = True
                cur_obj = float(obj[j])
                return cur_obj
        return None

    def pair_swap() -> float | None:
        nonlocal cur_obj
        if m < 2:
            return None
        cand = np.nonzero(~in_set)[0]
        if cand.size < 2:
            return None
        for pi in range(m):
            for pj in range(pi + 1, m):
                keep = np.array(
                    [s for i, s in enumerate(selected) if i not in (pi, pj)],
                    dtype=np.int64,
                )
                base_min = (
                    D[:, keep].min(axis=1) if keep.size else np.full(n, np.inf)
                )
                if lam_d != 0.0:
                    sub = CS[np.ix_(keep, keep)]
                    base_sum = sub.sum() - np.trace(sub)
                    cross_keep = CS[np.ix_(cand, keep)].sum(axis=1)
                for ai in range(cand.size - 1):
                    a = int(cand[ai])
                    rest = cand[ai + 1:]
                    a_min = np.minimum(base_min, D[:, a])
                    new_min = np.minimum(a_min[:, None], D[:, rest])
                    obj = -lam_r * np.exp(-new_min.mean(axis=0))
                    if lam_d != 0.0:
                        pair_sum = (
                            base_sum
                            + 2.0 * cross_keep[ai]
                            + 2.0 * cross_keep[ai + 1:]
                            + 2.0 * CS[a, rest]
                        )
                        obj = obj + lam_d * pair_sum / (m * (m - 1))
                    better = np.nonzero(cur_obj - obj > SWAP_EPS)[0]
                    if better.size:
                        j = int(better[0])
                        out_i, out_j = selected[pi], selected[pj]
                        selected[pi] = a
                        selected[pj] = int(rest[j])
                        in_set[out_i] = False
                        in_set[out_j] = False
                        in_set[a] = True
                        in_set[rest[j]] = True
                        cur_obj = float(obj[j])
                        return cur_obj
        return None

    for _ in range(max_sweeps):
        if single_swap() is not None:
            continue
        if pair_swap() is None:
            break
    return np.sort(np.array(selected, dtype=np.int64))


def select_kmeans_mmd(X, vpc: int, rng, max_sweeps: int = 20) -> np.ndarray:
    """Cluster the pool, take per-cluster medoids, then shrink the kernel
    discrepancy between the picked set and the pool by local swaps.

    The swap phase minimizes the S-dependent part of the unbiased squared
    MMD between pool and selection under an RBF kernel at the median
    bandwidth. Degenerate pools (zero median distance) skip the swap phase.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if vpc >= n:
        return np.arange(n, dtype=np.int64)

    assign, C = weighted_kmeans(X, np.ones(n), vpc, rng)
    selected: list[int] = []
    for j in range(vpc):
        members = np.nonzero(assign == j)[0]
        d = np.sum((X[members] - C[j]) ** 2, axis=1)
        selected.append(int(members[_argmin_tied(d)]))
    selected = sorted(set(selected))
    if len(selected) < vpc:
        pad = _pad_farthest(X, np.array(selected, dtype=np.int64), vpc - len(selected))
        selected = sorted(pad.tolist())

    if vpc >= 2 and max_sweeps > 0:
        try:
            gamma = median_heuristic(X)
        except ValueError:
            gamma = None
        if gamma is not None:
            selected = _mmd_refine(X, selected, gamma, max_sweeps)
    return np.array(sorted(selected), dtype=np.int64)


def _mmd_refine(X: np.ndarray, selected: list[int], gamma: float, max_sweeps: int) -> list[int]:
    n = X.shape[0]
    m = len(selected)
    K = np.exp(-gamma * sq_distance_matrix(X, X))
    col_tot = K.sum(axis=0)

    def score(sel: np.ndarray) -> float:
        # S-dependent part of unbiased MMD^2(pool, S); the pool-pool term is
        # constant so it is dropped
        sub = K[np.ix_(sel, sel)]
        within = (sub.sum() - np.trace(sub)) / (m * (m - 1))
        cross = col_tot[sel].sum() / (n * m)
        return float(within - 2.0 * cross)

    sel = list(selected)
    in_set = np.zeros(n, dtype=bool)
    in_set[np.array(sel, dtype=np.int64)] = True
    cur = score(np.array(sel, dtype=np.int64))
    for _ in range(max_sweeps):
        improved = False
        for pos in range(m):
            keep = np.array([s for i, s in enumerate(sel) if i != pos], dtype=np.int64)
            cand = np.nonzero(~in_set)[0]
            sub = K[np.ix_(keep, keep)]
            base_sum = sub.sum() - np.trace(sub)
            cross_keep = col_tot[keep].sum()
            pair = K[np.ix_(cand, keep)].sum(axis=1)
            within = (base_sum + 2.0 * pair) / (m * (m - 1))
            cross = (cross_keep + col_tot[cand]) / (n * m)
            obj = within - 2.0 * cross
            better = np.nonzero(cur - obj > SWAP_EPS)[0]
            if better.size:
                j = int(better[0])
                out = sel[pos]
                sel[pos] = int(cand[j])
                in_set[out] = False
                in_set[cand[j]] = True
                cur = float(obj[j])
                improved = True
                break
        if not improved:
            break
    return sel


def _class_objective(Xc: np.ndarray, local: np.ndarray, weights: ObjectiveWeights) -> float:
    if local.size == 0:
        return float("nan")
    try:
        return combined_objective(Xc, local, weights)
    except ValueError:
        # undefined objective (e.g. zero-norm member with lambda_d > 0)
        return float("nan")


def _worker_count() -> int:
    # DISTILL_THREADS caps parallelism; 0 or unset means all cores
    env = os.environ.get("DISTILL_THREADS", "").strip()
    if env:
        try:
            v = int(env)
        except ValueError as e:
            raise ValueError(f"DISTILL_THREADS must be an integer, got {env!r}") from e
        if v < 0:
            raise ValueError("DISTILL_THREADS must be >= 0")
        if v > 0:
            return v
    return os.cpu_count() or 1


def distill(
    ds: EmbeddingSet,
    config: SelectionConfig,
    scores=None,
    collect_timings: bool = False,
) -> SelectionResult:
    """Run one selection method over every class of the dataset.

    Each class c gets the stream derive_stream(master_seed, c) and is
    processed independently, so the per-class picks are identical no matter
    how many worker threads run them (capped by DISTILL_THREADS). Score-based
    methods require a full-length scores array. Returns global row indices
    per class plus the combined objective value of each class's picks;
    collect_timings additionally records per-class wall seconds.
    """
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (ds.n,):
            raise ValueError(f"scores must have shape ({ds.n},)")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
    if config.method in ("top_score", "knapsack") and scores is None:
        raise ValueError(f"method {config.method!r} requires scores")

    weights = config.effective_weights()

    def run_class(c: int):
        t0 = time.perf_counter()
        idx = ds.class_indices(c)
        if idx.size == 0:
            return np.empty(0, dtype=np.int64), float("nan"), time.perf_counter() - t0
        Xc = ds.X[idx].astype(np.float64)
        rng = derive_stream(config.master_seed, c)
        k = min(config.vpc, idx.size)
        if config.method == "random":
            local = select_random(Xc, config.vpc, rng)
        elif config.method == "top_score":
            local = select_top_score(Xc, scores[idx], config.vpc)
        elif config.method == "knapsack":
            local = select_knapsack(scores[idx], np.ones(idx.size, dtype=np.int64), k)
            local = _pad_topk(local, scores[idx], k)
        elif config.method == "tacdt":
            local = select_tacdt(
                Xc,
                config.vpc,
                rng,
                pca_dims=config.pca_dims,
                threshold_scale=config.birch_threshold_scale,
                branching=config.birch_branching,
            )
        elif config.method == "greedy_objective":
            local = select_greedy_objective(
                Xc, config.vpc, weights, config.local_search_max_sweeps
            )
        else:
            local = select_kmeans_mmd(Xc, config.vpc, rng, config.local_search_max_sweeps)
        obj = _class_objective(Xc, local, weights)
        return idx[local], obj, time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(run_class, range(ds.num_classes)))

    per_class = [np.sort(r[0]) for r in results]
    objectives = [r[1] for r in results]
    return SelectionResult(
        per_class=per_class,
        objectives=objectives,
        method=config.method,
        vpc=config.vpc,
        wall_time=[r[2] for r in results] if collect_timings else None,
    )
