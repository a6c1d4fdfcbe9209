"""Planar points, distances and exact k-nearest-neighbor queries.

Points are stored as an ``(N, 2)`` float array. The :class:`NeighborIndex`
buckets point indices on a uniform grid; every query it answers is identical
to an exhaustive scan (same distances, same tie order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    x: float
    y: float


def as_points(points) -> np.ndarray:
    """Coerce a sequence of points to a float ``(N, 2)`` array, rejecting non-finite values."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates")
    return arr


def distance(p, q) -> float:
    """Euclidean distance between two points."""
    return math.hypot(q[0] - p[0], q[1] - p[1])


def _ordered(cand: np.ndarray, dist: np.ndarray, k: int) -> np.ndarray:
    # Sort rows by (distance, index); returns column order per row.
    return np.lexsort((cand, dist), axis=-1)[..., :k]


def knearest_scan(points, query: int, k: int) -> list[tuple[int, float]]:
    """Brute-force reference for :meth:`NeighborIndex.knearest`."""
    pts = as_points(points)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n - 1:
        raise ValueError("insufficient points")
    diff = pts - pts[query]
    d = np.hypot(diff[:, 0], diff[:, 1])
    idx = np.arange(n)
    keep = idx != query
    idx, d = idx[keep], d[keep]
    order = np.lexsort((idx, d))[:k]
    return [(int(idx[j]), float(d[j])) for j in order]


@dataclass(frozen=True)
class NeighborIndex:
    """Uniform-grid bucketing of a fixed point set.

    ``cells`` maps integer cell coordinates ``(i, j)`` to the array of point
    indices lying in that cell. Immutable after construction.
    """

    points: np.ndarray
    cell_size: float
    origin: tuple[float, float]
    shape: tuple[int, int]
    cells: dict = field(repr=False)
    cell_of: np.ndarray = field(repr=False)
    cell_keys: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)

    def _ring_candidates(self, ci: int, cj: int, ring: int) -> np.ndarray:
        if (2 * ring + 1) ** 2 <= len(self.cells):
            keys = (
                (ci + di, cj + dj)
                for di in range(-ring, ring + 1)
                for dj in range(-ring, ring + 1)
            )
        else:
            # ring larger than the occupied set: filter occupied cells instead
            near = np.maximum(np.abs(self.cell_keys[:, 0] - ci), np.abs(self.cell_keys[:, 1] - cj)) <= ring
            keys = (tuple(int(v) for v in key) for key in self.cell_keys[near])
        buckets = [self.cells[key] for key in keys if key in self.cells]
        if not buckets:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(buckets)

    def _query_cell(self, members: np.ndarray, ci: int, cj: int, k: int):
        """k nearest for all ``members`` of one cell; returns (indices, distances)."""
        n = len(self.points)
        ring = 1
        max_ring = max(self.shape)
        while True:
            cand = self._ring_candidates(ci, cj, ring)
            if len(cand) >= k + 1:
                q = self.points[members]
                diff = self.points[cand][None, :, :] - q[:, None, :]
                d = np.hypot(diff[..., 0], diff[..., 1])
                cmat = np.broadcast_to(cand, d.shape)
                d = np.where(cmat == members[:, None], np.inf, d)
                order = _ordered(cmat, d, k)
                nd = np.take_along_axis(d, order, axis=1)
                # Anything outside the ring lies at least ring*cell_size away.
                if ring >= max_ring or len(cand) == n or np.all(nd[:, -1] <= ring * self.cell_size):
                    return np.take_along_axis(cmat, order, axis=1), nd
            elif ring >= max_ring:
                raise ValueError("insufficient points")
            ring = ring + 1 if ring < 3 else 2 * ring

    def knearest(self, query: int, k: int) -> list[tuple[int, float]]:
        """The ``k`` nearest other points to point ``query`` as ``(index, distance)`` pairs.

        Sorted by ascending distance, ties broken by ascending index.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if k > len(self.points) - 1:
            raise ValueError("insufficient points")
        ci, cj = self.cell_of[query]
        idx, d = self._query_cell(np.array([query]), int(ci), int(cj), k)
        return [(int(i), float(x)) for i, x in zip(idx[0], d[0])]

    def knearest_many(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Bulk version of :meth:`knearest`: arrays of shape ``(len(queries), k)``.

        Queries are batched by grid cell so each cell's candidate block is
        computed once.
        """
        queries = np.asarray(queries, dtype=np.intp)
        if k < 1:
            raise ValueError("k must be >= 1")
        if k > len(self.points) - 1:
            raise ValueError("insufficient points")
        out_idx = np.empty((len(queries), k), dtype=np.intp)
        out_d = np.empty((len(queries), k))
        if len(queries) == 0:
            return out_idx, out_d
        qcells = self.cell_of[queries]
        keys = qcells[:, 0] * (self.shape[1] + 1) + qcells[:, 1]
        order = np.argsort(keys, kind="stable")
        bounds = np.flatnonzero(np.diff(keys[order])) + 1
        for group in np.split(order, bounds):
            ci, cj = qcells[group[0]]
            idx, d = self._query_cell(queries[group], int(ci), int(cj), k)
            out_idx[group] = idx
            out_d[group] = d
        return out_idx, out_d


def build_index(points, cell_size: float) -> NeighborIndex:
    pts = as_points(points)
    if len(pts) == 0:
        raise ValueError("empty input")
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise ValueError("bad cell size")
    lo = pts.min(axis=0)
    cell_of = np.floor((pts - lo) / cell_size).astype(np.intp)
    shape = tuple(int(s) + 1 for s in cell_of.max(axis=0))
    cells: dict[tuple[int, int], np.ndarray] = {}
    keys = cell_of[:, 0] * (shape[1] + 1) + cell_of[:, 1]
    order = np.argsort(keys, kind="stable")
    bounds = np.flatnonzero(np.diff(keys[order])) + 1
    for group in np.split(order, bounds):
        ci, cj = cell_of[group[0]]
        cells[(int(ci), int(cj))] = np.sort(group)
    return NeighborIndex(
        points=pts,
        cell_size=float(cell_size),
        origin=(float(lo[0]), float(lo[1])),
        shape=shape,
        cells=cells,
        cell_of=cell_of,
        cell_keys=np.array(sorted(cells), dtype=np.intp).reshape(-1, 2),
    )


def default_cell_size(points: np.ndarray, per_cell: float = 2.0) -> float:
    """Cell side giving roughly ``per_cell`` points per occupied cell."""
    pts = as_points(points)
    span = np.ptp(pts, axis=0) if len(pts) else np.zeros(2)
    area = max(float(span[0] * span[1]), 1e-300)
    if len(pts) < 2 or area <= 1e-300:
        return max(float(span.max()), 1.0)
    return math.sqrt(per_cell * area / len(pts))
