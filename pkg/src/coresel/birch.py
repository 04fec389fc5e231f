"""Incremental CF-tree clustering with a weighted k-means global phase.

A clustering feature (CF) summarizes a point set by (count, linear sum,
squared-norm sum), which is enough to merge sets in O(1) and to read off the
centroid and RMS radius without revisiting points. The tree absorbs points
one at a time into the nearest leaf entry while the entry radius stays under
a threshold, splitting nodes that exceed the branching factor. Leaf entries
here also keep the ids of their member points, which classic CF-trees drop;
downstream selection needs to map cluster representatives back to pool rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import sq_distance_matrix


@dataclass
class ClusteringFeature:
    n: int
    ls: np.ndarray  # (D,) linear sum
    ss: float       # sum of squared norms

    @property
    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    @property
    def radius(self) -> float:
        # mean squared distance to centroid; clamp since ss/n - ||c||^2 can
        # dip below zero in floating point for tight clusters
        c = self.ls / self.n
        r2 = self.ss / self.n - float(np.dot(c, c))
        return float(np.sqrt(max(r2, 0.0)))

    def copy(self) -> "ClusteringFeature":
        return ClusteringFeature(self.n, self.ls.copy(), self.ss)


def cf_from_point(x) -> ClusteringFeature:
    """CF of a single point: (1, x, ||x||^2)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-d vector")
    return ClusteringFeature(1, x.copy(), float(np.dot(x, x)))


def cf_merge(a: ClusteringFeature, b: ClusteringFeature) -> ClusteringFeature:
    """Merge two CFs; exact regardless of how points were grouped."""
    if a.ls.shape != b.ls.shape:
        raise ValueError(f"dimension mismatch: {a.ls.shape} vs {b.ls.shape}")
    return ClusteringFeature(a.n + b.n, a.ls + b.ls, a.ss + b.ss)


def _fold(cfs) -> ClusteringFeature:
    it = iter(cfs)
    acc = next(it).copy()
    for cf in it:
        acc = cf_merge(acc, cf)
    return acc


@dataclass
class LeafEntry:
    cf: ClusteringFeature
    members: list[int] = field(default_factory=list)


class _Node:
    __slots__ = ("leaf", "entries", "children", "cf")

    def __init__(self, leaf: bool):
        self.leaf = leaf
        self.entries: list[LeafEntry] = []
        self.children: list[_Node] = []
        self.cf: ClusteringFeature | None = None

    def refold(self):
        cfs = [e.cf for e in self.entries] if self.leaf else [c.cf for c in self.children]
        self.cf = _fold(cfs) if cfs else None


class CFTree:
    """Threshold/branching-bounded CF-tree over points inserted one by one."""

    def __init__(self, threshold: float, branching_factor: int):
        if not (threshold > 0):
            raise ValueError("threshold must be positive")
        if branching_factor < 2:
            raise ValueError("branching_factor must be >= 2")
        self.threshold = float(threshold)
        self.branching_factor = int(branching_factor)
        self._root: _Node | None = None
        self._dim: int | None = None
        self._ids: set[int] = set()

    @property
    def n_inserted(self) -> int:
        return len(self._ids)

    def insert(self, x, item_id: int):
        """Insert one point with a caller-chosen unique id."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("expected a 1-d vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite coordinates")
        if self._dim is None:
            self._dim = x.shape[0]
        elif x.shape[0] != self._dim:
            raise ValueError(f"dimension mismatch: got {x.shape[0]}, tree has {self._dim}")
        item_id = int(item_id)
        if item_id in self._ids:
            raise ValueError(f"duplicate item id {item_id}")
        self._ids.add(item_id)

        if self._root is None:
            root = _Node(leaf=True)
            root.entries.append(LeafEntry(cf_from_point(x), [item_id]))
            root.refold()
            self._root = root
            return

        # descend to the leaf whose subtree centroid is nearest
        path: list[_Node] = []
        node = self._root
        while not node.leaf:
            path.append(node)
            cents = np.stack([c.cf.centroid for c in node.children])
            d2 = np.sum((cents - x) ** 2, axis=1)
            node = node.children[int(np.argmin(d2))]

        point_cf = cf_from_point(x)
        cents = np.stack([e.cf.centroid for e in node.entries])
        d2 = np.sum((cents - x) ** 2, axis=1)
        i = int(np.argmin(d2))
        merged = cf_merge(node.entries[i].cf, point_cf)
        if merged.radius <= self.threshold:
            node.entries[i] = LeafEntry(merged, node.entries[i].members + [item_id])
        else:
            node.entries.append(LeafEntry(point_cf, [item_id]))
        node.refold()

        overflow: tuple[_Node, _Node, _Node] | None = None
        if len(node.entries) > self.branching_factor:
            a, b = self._split_leaf(node)
            overflow = (node, a, b)

        for parent in reversed(path):
            if overflow is not None:
                old, a, b = overflow
                j = parent.children.index(old)
                parent.children[j : j + 1] = [a, b]
                overflow = None
            parent.refold()
            if len(parent.children) > self.branching_factor:
                a, b = self._split_internal(parent)
                overflow = (parent, a, b)

        if overflow is not None:
            old, a, b = overflow
            root = _Node(leaf=False)
            root.children = [a, b]
            root.refold()
            self._root = root

    @staticmethod
    def _farthest_pair(cents: np.ndarray) -> tuple[int, int]:
        d2 = sq_distance_matrix(cents, cents)
        np.fill_diagonal(d2, -1.0)
        # flat argmax scans row-major, so the first maximal (i, j) has the
        # lexicographically smallest indices; symmetry guarantees i < j
        i, j = np.unravel_index(int(np.argmax(d2)), d2.shape)
        return int(i), int(j)

    def _split_leaf(self, node: _Node) -> tuple[_Node, _Node]:
        cents = np.stack([e.cf.centroid for e in node.entries])
        i, j = self._farthest_pair(cents)
        left, right = _Node(leaf=True), _Node(leaf=True)
        left.entries.append(node.entries[i])
        right.entries.append(node.entries[j])
        for t, entry in enumerate(node.entries):
            if t in (i, j):
                continue
            da = float(np.sum((cents[t] - cents[i]) ** 2))
            db = float(np.sum((cents[t] - cents[j]) ** 2))
            (left if da <= db else right).entries.append(entry)
        left.refold()
        right.refold()
        return left, right

    def _split_internal(self, node: _Node) -> tuple[_Node, _Node]:
        cents = np.stack([c.cf.centroid for c in node.children])
        i, j = self._farthest_pair(cents)
        left, right = _Node(leaf=False), _Node(leaf=False)
        left.children.append(node.children[i])
        right.children.append(node.children[j])
        for t, child in enumerate(node.children):
            if t in (i, j):
                continue
            da = float(np.sum((cents[t] - cents[i]) ** 2))
            db = float(np.sum((cents[t] - cents[j]) ** 2))
            (left if da <= db else right).children.append(child)
        left.refold()
        right.refold()
        return left, right

    def leaf_entries(self) -> list[LeafEntry]:
        """All leaf entries, left to right."""
        out: list[LeafEntry] = []
        if self._root is None:
            return out
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.extend(node.entries)
            else:
                stack.extend(reversed(node.children))
        return out

    def audit(self):
        """Raise AssertionError if any tree invariant is violated."""
        if self._root is None:
            return
        seen: set[int] = set()

        def walk(node: _Node):
            assert node.cf is not None, "node with empty CF"
            if node.leaf:
                folded = _fold(e.cf for e in node.entries)
                for e in node.entries:
                    assert e.cf.n == len(e.members), "entry count != member count"
                    assert e.cf.radius <= self.threshold + 1e-9, (
                        f"entry radius {e.cf.radius} exceeds threshold {self.threshold}"
                    )
                    for m in e.members:
                        assert m not in seen, f"duplicate member id {m}"
                        seen.add(m)
            else:
                assert len(node.children) >= 1
                assert len(node.children) <= self.branching_factor, "overfull node"
                folded = _fold(c.cf for c in node.children)
                for c in node.children:
                    walk(c)
            assert folded.n == node.cf.n, "CF count mismatch"
            scale = max(1.0, float(np.linalg.norm(node.cf.ls)), abs(node.cf.ss))
            assert float(np.linalg.norm(folded.ls - node.cf.ls)) <= 1e-6 * scale, "CF ls drift"
            assert abs(folded.ss - node.cf.ss) <= 1e-6 * scale, "CF ss drift"

        walk(self._root)
        assert seen == self._ids, "member ids do not match inserted ids"
        assert self._root.cf.n == len(self._ids), "root count mismatch"

    def dump(self) -> str:
        """Human-readable tree outline, stable across runs for a fixed build."""
        lines: list[str] = []
        if self._root is None:
            return "(empty)"

        def fmt(v: np.ndarray) -> str:
            return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"

        def walk(node: _Node, depth: int):
            pad = "  " * depth
            if node.leaf:
                lines.append(f"{pad}leaf n={node.cf.n}")
                for e in node.entries:
                    lines.append(
                        f"{pad}  entry n={e.cf.n} r={e.cf.radius:.6g} "
                        f"c={fmt(e.cf.centroid)} members={sorted(e.members)}"
                    )
            else:
                lines.append(f"{pad}node n={node.cf.n} children={len(node.children)}")
                for c in node.children:
                    walk(c, depth + 1)

        walk(self._root, 0)
        return "\n".join(lines)


@dataclass
class GlobalClustering:
    assignments: np.ndarray  # (n_entries,) cluster index per leaf entry
    centroids: np.ndarray    # (k_eff, D) weighted cluster centroids


def _weighted_draw(rng, weights: np.ndarray) -> int:
    cum = np.cumsum(weights)
    r = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, r, side="right")), len(weights) - 1)


def weighted_kmeans(points, weights, k: int, rng, max_iter: int = 100):
    """Weighted k-means with k-means++ seeding and empty-cluster repair.

    Returns (assignments, centroids). Deterministic given the rng stream:
    seeding draws via inverse-CDF on explicit cumulative sums, argmin ties
    resolve to the lowest index, and empty clusters steal the point farthest
    from its own centroid among clusters that can spare one.
    """
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = points.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}]")

    chosen: list[int] = []
    taken = np.zeros(n, dtype=bool)
    first = _weighted_draw(rng, weights)
    chosen.append(first)
    taken[first] = True
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    while len(chosen) < k:
        probs = weights * d2
        if float(probs.sum()) <= 0.0:
            idx = int(np.nonzero(~taken)[0][0])
        else:
            idx = _weighted_draw(rng, probs)
        chosen.append(idx)
        taken[idx] = True
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))

    C = points[chosen].copy()
    prev = None
    for _ in range(max_iter):
        D2 = sq_distance_matrix(points, C)
        assign = np.argmin(D2, axis=1)
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                continue
            eligible = counts[assign] >= 2
            own = D2[np.arange(n), assign]
            score = np.where(eligible, own, -1.0)
            donor = int(np.argmax(score))
            counts[assign[donor]] -= 1
            assign[donor] = j
            counts[j] += 1
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign
        for j in range(k):
            mask = assign == j
            w = weights[mask]
            C[j] = (points[mask] * w[:, None]).sum(axis=0) / w.sum()
    return prev if prev is not None else assign, C


def global_cluster(entries: list[LeafEntry], k: int, rng) -> GlobalClustering:
    """Cluster leaf entries into k groups, weighting each by its point count.

    With k at or above the number of entries every entry gets its own
    cluster and the centroids are the entry centroids unchanged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not entries:
        raise ValueError("no leaf entries to cluster")
    cents = np.stack([e.cf.centroid for e in entries])
    if k >= len(entries):
        return GlobalClustering(
            assignments=np.arange(len(entries), dtype=np.int64),
            centroids=cents,
        )
    weights = np.array([e.cf.n for e in entries], dtype=np.float64)
    assign, C = weighted_kmeans(cents, weights, k, rng)
    return GlobalClustering(assignments=np.asarray(assign, dtype=np.int64), centroids=C)
