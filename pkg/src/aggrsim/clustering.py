"""Particle-configuration diagnostics: cluster counting, pairwise spread.

Cluster counting is single-linkage at a threshold radius: particles
within ``link_radius`` of each other are linked, and the count is the
number of connected components of that graph (union-find).  Invariant
under particle reordering and rigid motions.
"""

from __future__ import annotations

import numpy as np


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, i: int) -> int:
        p = self.parent
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:  # path compression
            p[i], i = root, p[i]
        return root

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def cluster_count(particles, link_radius: float) -> int:
    """Number of single-linkage clusters at the given threshold radius."""
    if link_radius <= 0:
        raise ValueError("link_radius must be positive")
    positions = np.asarray(getattr(particles, "positions", particles), dtype=np.float64)
    n = positions.shape[0]
    if n == 0:
        return 0
    uf = _UnionFind(n)
    r2 = link_radius**2
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        block = positions[start : start + chunk]
        d2 = ((block[:, None, :] - positions[None, :, :]) ** 2).sum(axis=-1)
        ii, jj = np.nonzero(d2 <= r2)
        for i, j in zip(ii + start, jj):
            if i < j:
                uf.union(int(i), int(j))
    roots = {uf.find(i) for i in range(n)}
    return len(roots)


def mean_pairwise_distance(particles) -> float:
    """Mean Euclidean distance over all unordered particle pairs."""
    positions = np.asarray(getattr(particles, "positions", particles), dtype=np.float64)
    n = positions.shape[0]
    if n < 2:
        return 0.0
    total = 0.0
    count = 0
    chunk = max(1, 4_000_000 // n)
    for start in range(0, n, chunk):
        block = positions[start : start + chunk]
        d = np.sqrt(((block[:, None, :] - positions[None, :, :]) ** 2).sum(axis=-1))
        iu = np.arange(start, start + block.shape[0])
        mask = iu[:, None] < np.arange(n)[None, :]
        total += float(d[mask].sum())
        count += int(mask.sum())
    return total / count
