"""Anchor initialization: K-Means clustering and mode-query encodings.

Clustering is Lloyd's algorithm with seeded k-means++ initialization so
anchor sets are reproducible from (input, seed). The per-iteration
objective history is kept on the result for monotonicity checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .instances import AnchorBox, MapPolyline, default_anchor_params

# Frequency-ladder base of the sinusoidal position encoding.
PE_TEMPERATURE = 10000.0

# Production-scale anchor counts; desk runs use much smaller values.
FULL_SCALE_NUM_BOXES = 900
FULL_SCALE_NUM_POLYLINES = 100
FULL_SCALE_NUM_MODES = 6


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    objective: float
    objective_history: tuple[float, ...]


@dataclass(frozen=True)
class ModeQuery:
    intention_point: tuple[float, float]
    encoding: np.ndarray


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ seeding: spread initial centroids by squared distance."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            centroids[i] = points[rng.integers(n)]
            continue
        idx = rng.choice(n, p=d2 / total)
        centroids[i] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(points, k: int, seed: int = 0, max_iters: int = 100) -> KMeansResult:
    """Lloyd's iterations to an assignment fixpoint, deterministic per seed."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > np.unique(pts, axis=0).shape[0]:
        raise ValueError("k too large")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(pts, k, rng)
    assignment = np.full(pts.shape[0], -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = d2.argmin(axis=1)
        history.append(float(d2[np.arange(pts.shape[0]), new_assignment].sum()))
        for j in range(k):
            members = pts[new_assignment == j]
            if members.shape[0] > 0:
                centroids[j] = members.mean(axis=0)
        if np.array_equal(new_assignment, assignment):
            assignment = new_assignment
            break
        assignment = new_assignment

    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assignment = d2.argmin(axis=1)
    objective = float(d2[np.arange(pts.shape[0]), assignment].sum())
    history.append(objective)
    return KMeansResult(centroids, assignment, objective, tuple(history))


def cluster_anchor_boxes(gt_centers, n_boxes: int, seed: int = 0) -> list[AnchorBox]:
    """Anchor boxes at clustered (x, y, z) locations with default params."""
    centers = np.asarray(gt_centers, dtype=np.float64)
    if centers.size == 0:
        raise ValueError("no ground-truth centers")
    result = kmeans(centers, n_boxes, seed=seed)
    rest = default_anchor_params()
    return [
        AnchorBox(float(c[0]), float(c[1]), float(c[2]), *rest)
        for c in result.centroids
    ]


def cluster_polylines(gt_polylines, n_polylines: int, seed: int = 0) -> list[MapPolyline]:
    """Cluster fixed-length polylines as flattened 2*N_p vectors."""
    if not gt_polylines:
        raise ValueError("no polylines")
    n_pts = gt_polylines[0].num_points
    for p in gt_polylines:
        if p.num_points != n_pts:
            raise ValueError("ragged polylines")
    flat = np.stack([p.points.reshape(-1) for p in gt_polylines])
    result = kmeans(flat, n_polylines, seed=seed)
    return [MapPolyline(c.reshape(n_pts, 2)) for c in result.centroids]


def sinusoidal_pe(point, dim: int, temperature: float = PE_TEMPERATURE) -> np.ndarray:
    """Sin/cos encoding of a 2-D point over a geometric frequency ladder.

    Half the channels encode x, half y; within each half the channels are
    interleaved (sin, cos) pairs of x / temperature**(2j / (dim/2)).
    """
    if dim % 4 != 0:
        raise ValueError("bad dimension")
    x, y = float(point[0]), float(point[1])
    per_coord = dim // 2
    j = np.arange(per_coord // 2, dtype=np.float64)
    freqs = temperature ** (2.0 * j / per_coord)
    out = np.empty(dim, dtype=np.float64)
    for i, coord in enumerate((x, y)):
        phase = coord / freqs
        out[i * per_coord:(i + 1) * per_coord:2] = np.sin(phase)
        out[i * per_coord + 1:(i + 1) * per_coord:2] = np.cos(phase)
    return out


def build_mode_queries(endpoints, k: int, dim: int, seed: int = 0) -> list[ModeQuery]:
    """Cluster trajectory endpoints into intention points and encode them."""
    pts = np.asarray(endpoints, dtype=np.float64)
    result = kmeans(pts, k, seed=seed)
    return [
        ModeQuery((float(c[0]), float(c[1])), sinusoidal_pe(c, dim))
        for c in result.centroids
    ]


def save_anchors(path, boxes: list[AnchorBox], polylines: list[MapPolyline]) -> None:
    payload = {
        "boxes": [b.to_vector().tolist() for b in boxes],
        "polylines": [p.points.tolist() for p in polylines],
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)


def load_anchors(path) -> tuple[list[AnchorBox], list[MapPolyline]]:
    with open(path) as f:
        payload = json.load(f)
    boxes = [AnchorBox.from_vector(v) for v in payload["boxes"]]
    polylines = [MapPolyline(np.asarray(p)) for p in payload["polylines"]]
    return boxes, polylines
