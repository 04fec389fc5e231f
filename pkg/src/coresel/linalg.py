"""Deterministic numerical primitives: similarity measures, PCA, seeded streams.

Everything here is reproducible bit-for-bit for a fixed numpy version. The
eigensolver is a hand-rolled cyclic Jacobi rather than LAPACK so that results
do not depend on the BLAS build, and random streams are counter-based Philox
keyed by (master_seed, stream_id) so substreams can be derived independently
of draw order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream(np.random.Generator):
    """A numpy Generator pinned to a (master_seed, stream_id) pair."""

    def __init__(self, master_seed: int, stream_id: int):
        key = (master_seed & _MASK64) | ((stream_id & _MASK64) << 64)
        super().__init__(np.random.Philox(key=key))
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def derive_stream(master_seed: int, stream_id: int) -> RngStream:
    """Derive an independent random stream from a master seed.

    Streams with distinct ids are statistically independent and stable across
    platforms: the pair is packed into a 128-bit Philox key, low word the seed,
    high word the id. Deriving the same pair twice gives identical draws.
    """
    if not isinstance(master_seed, (int, np.integer)):
        raise TypeError("master_seed must be an integer")
    if not isinstance(stream_id, (int, np.integer)):
        raise TypeError("stream_id must be an integer")
    if master_seed < 0 or stream_id < 0:
        raise ValueError("master_seed and stream_id must be non-negative")
    return RngStream(int(master_seed), int(stream_id))


def sample_without_replacement(rng, n: int, k: int) -> np.ndarray:
    """First k elements of a seeded Fisher-Yates shuffle of range(n).

    Only k swap positions are materialized, so sampling a few items from a
    large range stays cheap. Order of the returned indices is the draw order.
    """
    if not (0 <= k <= n):
        raise ValueError(f"k must be in [0, {n}]")
    idx = np.arange(n, dtype=np.int64)
    for i in range(k):
        j = i + int(rng.integers(0, n - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k].copy()


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Raises ValueError on dimension mismatch or a zero-norm input.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        which = "a" if na == 0.0 else "b"
        raise ValueError(f"zero-norm vector: {which}")
    v = float(np.dot(a, b) / (na * nb))
    # float round-off can push |v| a hair past 1
    return max(-1.0, min(1.0, v))


def l2_distance(a, b) -> float:
    """Euclidean distance between two vectors of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def sq_distance_matrix(A, B) -> np.ndarray:
    """All-pairs squared euclidean distances, shape (len(A), len(B)).

    Uses the expanded form with a clamp at zero; cheaper than broadcasting
    differences when either side is large.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    d2 = aa + bb - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _round_robin_rounds(n: int) -> list[list[tuple[int, int]]]:
    # Tournament scheduling (circle method): n-1 rounds for even n, each round
    # pairing every index exactly once, so rotations within a round commute.
    # Index n plays the bye when n is odd.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(pairs)
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns, in no
    particular order. The pair ordering within a sweep follows a fixed
    round-robin schedule, so pairs in one round are disjoint and their
    rotations are applied as one vectorized update. Converges when the
    off-diagonal Frobenius mass drops below tol relative to ||A||.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return np.diag(A).copy(), V
    rounds = _round_robin_rounds(n)
    scale = float(np.linalg.norm(A))
    if scale == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, float(np.sum(A * A) - np.sum(np.diag(A) ** 2))))
        if off <= tol * scale:
            break
        for pairs in rounds:
            p = np.array([x for x, _ in pairs])
            q = np.array([y for _, y in pairs])
            apq = A[p, q]
            app = A[p, p]
            aqq = A[q, q]
            active = np.abs(apq) > 1e-300
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                theta = (aqq - app) / (2.0 * apq)
                # theta may be +-inf for negligible apq; t then collapses to 0
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            rows_p = A[p, :]
            rows_q = A[q, :]
            A[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            A[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            cols_p = A[:, p]
            cols_q = A[:, q]
            A[:, p] = cols_p * c - cols_q * s
            A[:, q] = cols_p * s + cols_q * c
            A[p, q] = 0.0
            A[q, p] = 0.0
            vp = V[:, p]
            vq = V[:, q]
            V[:, p] = vp * c - vq * s
            V[:, q] = vp * s + vq * c
    return np.diag(A).copy(), V


@dataclass
class PcaModel:
    """Fitted PCA basis: row-vector components, descending eigenvalues."""

    mean: np.ndarray         # (D,)
    components: np.ndarray   # (k, D), orthonormal rows
    eigenvalues: np.ndarray  # (k,), non-negative, descending

    @property
    def k(self) -> int:
        return self.components.shape[0]


def _complete_basis(components: list[np.ndarray], d: int, count: int) -> list[np.ndarray]:
    # Deterministic fill for zero-variance directions: orthonormalize standard
    # basis vectors against everything chosen so far.
    out = []
    have = list(components)
    for j in range(d):
        if len(out) == count:
            break
        v = np.zeros(d)
        v[j] = 1.0
        for u in have:
            v -= np.dot(v, u) * u
        norm = float(np.linalg.norm(v))
        if norm > 1e-8:
            v /= norm
            out.append(v)
            have.append(v)
    if len(out) < count:
        raise RuntimeError("could not complete orthonormal basis")
    return out


def _fix_signs(components: np.ndarray) -> np.ndarray:
    for i in range(components.shape[0]):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return components


def pca_fit(X, k: int) -> PcaModel:
    """Fit a k-dimensional PCA basis to rows of X.

    Requires 1 <= k <= min(N - 1, D) and N >= 2. When D > N the
    eigendecomposition runs on the N x N Gram matrix and eigenvectors are
    mapped back through the centered data, which keeps the cost O(N^2 D)
    for high-dimensional inputs. Components with (near) zero variance are
    completed deterministically from the standard basis. Each component's
    sign is fixed so its largest-magnitude coordinate is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional (N, D)")
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows to fit PCA")
    kmax = min(n - 1, d)
    if not (1 <= k <= kmax):
        raise ValueError(f"k must be in [1, {kmax}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean

    if d <= n:
        cov = (Xc.T @ Xc) / (n - 1)
        vals, vecs = jacobi_eigh(cov)
        order = np.argsort(-vals, kind="stable")[:k]
        eigenvalues = np.maximum(vals[order], 0.0)
        components = vecs[:, order].T.copy()
    else:
        gram = (Xc @ Xc.T) / (n - 1)
        vals, vecs = jacobi_eigh(gram)
        order = np.argsort(-vals, kind="stable")[:k]
        eigenvalues = np.maximum(vals[order], 0.0)
        tol = max(float(eigenvalues[0]), 1.0) * 1e-12
        rows: list[np.ndarray] = []
        pending = 0
        for lam, idx in zip(eigenvalues, order):
            if lam > tol:
                v = Xc.T @ vecs[:, idx]
                v /= np.sqrt((n - 1) * lam)
                norm = float(np.linalg.norm(v))
                if norm > 0:
                    v /= norm
                rows.append(v)
            else:
                pending += 1
        if pending:
            rows.extend(_complete_basis(rows, d, pending))
        components = np.stack(rows)

    components = _fix_signs(components)
    return PcaModel(mean=mean, components=components, eigenvalues=eigenvalues)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    """Project rows of X onto the fitted basis, shape (N, k)."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"dimension mismatch: data has {X.shape[1]}, model expects {model.mean.shape[0]}"
        )
    Y = (X - model.mean) @ model.components.T
    return Y[0] if single else Y
