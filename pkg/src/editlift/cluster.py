"""Seeded k-means++ over (embedding similarity, edit distance) points.

Editing-style groups come from clustering each record's 2-D similarity
profile. The cluster count is either fixed or picked by an elbow rule on
the marginal inertia reduction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .textsim import EditProfile

ELBOW_THRESHOLD = 0.15
MAX_LLOYD_ITERATIONS = 300


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray  # shape (k, 2)
    inertia: float
    seed: int

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Index of the nearest centroid for each row of `points`."""
        d2 = ((points[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)


@dataclass(frozen=True)
class ClusterAssignment:
    record_id: str
    cluster: int


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, the rest proportional to the
    squared distance to the nearest centroid chosen so far."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining mass at the chosen centroids: pick uniformly
            centroids[i] = points[rng.integers(n)]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
            centroids[i] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeanspp_fit(points, k: int, seed: int) -> ClusterModel:
    """One k-means++ seeding followed by Lloyd iterations to a fixpoint.

    Deterministic for a given (points, k, seed). Raises on k < 1 or fewer
    points than clusters.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array of shape (n, d)")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if len(pts) < k:
        raise ValueError(f"need at least k={k} points, got {len(pts)}")

    rng = np.random.default_rng(seed)
    centroids = _seed_centroids(pts, k, rng)
    labels = np.full(len(pts), -1, dtype=np.int64)
    for _ in range(MAX_LLOYD_ITERATIONS):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        for c in range(k):
            members = pts[new_labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                # re-seat an empty cluster on the point farthest from its centroid
                worst = int(np.argmax(d2[np.arange(len(pts)), new_labels]))
                centroids[c] = pts[worst]
                new_labels[worst] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(pts)), labels].sum())
    return ClusterModel(k=k, centroids=centroids.copy(), inertia=inertia, seed=seed)


def best_fit(points, k: int, seed: int, restarts: int = 10) -> ClusterModel:
    """Best of `restarts` seeded fits, lowest inertia winning; ties keep the
    earliest restart."""
    best: ClusterModel | None = None
    for i in range(restarts):
        model = kmeanspp_fit(points, k, seed + i)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def elbow_select(points, k_max: int, seed: int, restarts: int = 10,
                 threshold: float = ELBOW_THRESHOLD) -> int:
    """Smallest k whose marginal inertia reduction ratio drops below `threshold`.

    Ratio at k is (inertia(k) - inertia(k+1)) / inertia(k), each side the best
    of `restarts` fits. When no k qualifies the data shows no elbow up to
    k_max and a single cluster is reported.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < k_max:
        raise ValueError(f"need at least k_max={k_max} points, got {len(pts)}")
    inertias = [best_fit(pts, k, seed, restarts).inertia for k in range(1, k_max + 1)]
    for k in range(1, k_max):
        cur, nxt = inertias[k - 1], inertias[k]
        ratio = 0.0 if cur == 0.0 else (cur - nxt) / cur
        if ratio < threshold:
            return k
    return 1


def canonical_order(model: ClusterModel) -> ClusterModel:
    """Relabel clusters by ascending edit-distance coordinate of the centroid,
    so index 0 is always the most headline-preserving style."""
    order = np.lexsort((model.centroids[:, 0], model.centroids[:, 1]))
    return replace(model, centroids=model.centroids[order].copy())


def fit_profiles(profiles: list[EditProfile], k: int, seed: int,
                 restarts: int = 10) -> tuple[ClusterModel, list[ClusterAssignment]]:
    """Cluster profile points and hand back canonical assignments."""
    pts = np.array(
        [[p.embedding_similarity, p.edit_distance] for p in profiles], dtype=np.float64
    )
    model = canonical_order(best_fit(pts, k, seed, restarts))
    labels = model.assign(pts)
    assignments = [
        ClusterAssignment(record_id=p.record_id, cluster=int(c))
        for p, c in zip(profiles, labels)
    ]
    return model, assignments


def apply_assignments(profiles: list[EditProfile],
                      assignments: list[ClusterAssignment]) -> list[EditProfile]:
    by_id = {a.record_id: a.cluster for a in assignments}
    out = []
    for p in profiles:
        if p.record_id not in by_id:
            raise ValueError(f"no cluster assignment for record {p.record_id!r}")
        out.append(replace(p, cluster=by_id[p.record_id]))
    return out


def cluster_fractions(assignments: list[ClusterAssignment], corpus: Corpus,
                      k: int | None = None) -> dict[str, list[float]]:
    """Per-outlet fraction of records in each cluster; every row sums to 1."""
    by_id = {a.record_id: a.cluster for a in assignments}
    if k is None:
        k = max(by_id.values()) + 1 if by_id else 0
    counts: dict[str, list[int]] = {}
    for record in corpus:
        if record.id not in by_id:
            raise ValueError(f"record {record.id!r} has no cluster assignment")
        row = counts.setdefault(record.outlet, [0] * k)
        row[by_id[record.id]] += 1
    if not counts:
        raise ValueError("no records to tabulate")
    return {
        outlet: [c / sum(row) for c in row] for outlet, row in counts.items()
    }


def save_model(model: ClusterModel, path: str | Path) -> None:
    payload = {
        "k": model.k,
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "inertia": model.inertia,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ClusterModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return ClusterModel(
        k=int(payload["k"]),
        centroids=np.asarray(payload["centroids"], dtype=np.float64),
        inertia=float(payload["inertia"]),
        seed=int(payload["seed"]),
    )
