from __future__ import annotations

import math

import numpy as np


def polygon_diameter(pts: np.ndarray) -> float:
    """Diameter of a convex polygon given counter-clockwise.

    Small polygons are done by brute force.  Otherwise each edge is paired
    with the vertex whose normal cone contains the opposite edge direction
    (rotating calipers, vectorised through the sorted edge angles).
    """
    pts = np.asarray(pts, dtype=float)
    m = len(pts)
    if m < 2:
        return 0.0
    if m <= 512:
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))
    edges = np.roll(pts, -1, axis=0) - pts
    keep = np.any(edges != 0, axis=1)
    pts, edges = pts[keep], edges[keep]
    m = len(pts)
    ang = np.unwrap(np.arctan2(edges[:, 1], edges[:, 0]))
    # edge i runs from vertex i to i+1; vertex j is extreme for directions between edges j-1 and j
    j = np.searchsorted(np.concatenate([ang, ang + 2.0 * math.pi]), ang + math.pi) % m
    i = np.arange(m)
    best = 0.0
    for di in (0, 1):
        for dj in (-1, 0, 1):
            a = pts[(i + di) % m]
            b = pts[(j + dj) % m]
            best = max(best, float(np.max(np.sum((a - b) ** 2, axis=1))))
    return math.sqrt(best)


def polygon_perimeter(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=float)
    return float(np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))


def polygon_area(pts: np.ndarray) -> float:
    x, y = np.asarray(pts, dtype=float).T
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
