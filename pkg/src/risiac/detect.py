"""User detection in a depth map.

Pipeline: subtract the current map from the user-free background (the
user comes out positive because it is closer than what it hides), zero
the negative residue left by multi-bounce ghosts, cluster the positive
pixels with DBSCAN, keep the largest cluster and map its rounded centroid
back to a sensing-grid direction.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from risiac.array import SensingGrid
from risiac.imaging import DepthMap

NOISE = -1


class UserNotFound(RuntimeError):
    """No positive pixels, or no cluster reaching ``min_pts``."""


@dataclass(frozen=True)
class PixelCluster:
    members: list  # list of (x, y)

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DetectionResult:
    pixel: tuple[int, int]
    flat_index: int
    azimuth: float
    zenith: float
    cluster_size: int = 0

    def to_dict(self) -> dict:
        return {
            "pixel": list(self.pixel),
            "flat_index": self.flat_index,
            "azimuth_rad": self.azimuth,
            "zenith_rad": self.zenith,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def background_subtract(background: DepthMap, current: DepthMap) -> DepthMap:
    if background.shape != current.shape:
        raise ValueError(f"depth map shapes differ: {background.shape} vs {current.shape}")
    if (background.grid.m_h, background.grid.m_v) != (current.grid.m_h, current.grid.m_v):
        raise ValueError("depth maps were built on different sensing grids")
    return background.with_values(background.values - current.values)


def clip_negative(depth: DepthMap) -> DepthMap:
    return depth.with_values(np.maximum(depth.values, 0.0))


def positive_pixels(depth: DepthMap) -> list[tuple[int, int]]:
    """``(x, y)`` of strictly positive entries in row-major order."""
    ys, xs = np.nonzero(depth.values > 0)
    return list(zip(xs.tolist(), ys.tolist()))


def dbscan(points, eps: float, min_pts: int) -> tuple[np.ndarray, int]:
    """Label points by DBSCAN with Euclidean distance.

    A point is core when at least ``min_pts`` points (itself included)
    lie within ``eps``. Points are scanned in input order; each unvisited
    core point seeds a new cluster that grows breadth-first, and a border
    point belongs to the first cluster that reaches it.

    Returns
    -------
    labels : ndarray of int
        Cluster id per point, ``NOISE`` (-1) for noise.
    n_clusters : int
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.zeros((0, 2))
    n = pts.shape[0]
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels, 0
    neighbors = [sorted(nb) for nb in cKDTree(pts).query_ball_point(pts, r=eps)]
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    visited = np.zeros(n, dtype=bool)
    cluster = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = cluster
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in neighbors[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                if core[q] and not visited[q]:
                    visited[q] = True
                    queue.append(q)
        cluster += 1
    return labels, cluster


def clusters_from_labels(points, labels: np.ndarray, n_clusters: int) -> list[PixelCluster]:
    groups = [[] for _ in range(n_clusters)]
    for pt, lab in zip(points, labels):
        if lab != NOISE:
            groups[lab].append(tuple(pt))
    return [PixelCluster(g) for g in groups]


def _rounded_mean(values) -> int:
    """Mean of integers rounded half up, in exact integer arithmetic."""
    total, count = sum(values), len(values)
    return (2 * total + count) // (2 * count)


def detect_user(depth_bs: DepthMap, grid: SensingGrid, eps: float = 2.0, min_pts: int = 5) -> DetectionResult:
    """Locate the single user in a clipped background-subtracted map.

    The largest DBSCAN cluster wins; on equal size the cluster holding the
    smallest flat pixel index does. Its mean coordinate, rounded half up
    per axis, picks the sensing beam whose direction is returned.
    """
    points = positive_pixels(depth_bs)
    if not points:
        raise UserNotFound("background-subtracted map has no positive pixels")
    labels, n_clusters = dbscan(points, eps, min_pts)
    if n_clusters == 0:
        raise UserNotFound(f"no cluster with at least {min_pts} points among {len(points)} positives")
    clusters = clusters_from_labels(points, labels, n_clusters)

    def key(c: PixelCluster):
        return (-c.size, min(x + grid.m_h * y for x, y in c.members))

    best = min(clusters, key=key)
    xs, ys = zip(*best.members)
    x_u = _rounded_mean(xs)
    y_u = _rounded_mean(ys)
    m_u = grid.flatten(x_u, y_u)
    az, ze = grid.direction(m_u)
    return DetectionResult((x_u, y_u), m_u, az, ze, best.size)
