"""Exact and heuristic tours for small uniform instances.

``solve_exact`` is Held-Karp dynamic programming over subsets, vectorized
one subset-size layer at a time. ``solve_heuristic`` is nearest-neighbor
construction plus 2-opt, exhaustive for small instances and restricted to
neighbor-list candidates for large ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .geometry import as_points, build_index, default_cell_size
from .poisson import trial_rng

EXACT_LIMIT = 18
NEIGHBOR_LIST_THRESHOLD = 200
NEIGHBOR_LIST_SIZE = 10


class Mode(str, enum.Enum):
    EXACT = "Exact"
    HEURISTIC = "Heuristic"


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float


def distance_matrix(points) -> np.ndarray:
    pts = as_points(points)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def tour_length(points, order) -> float:
    pts = as_points(points)
    if len(order) < 2:
        return 0.0
    p = pts[list(order)]
    q = np.roll(p, -1, axis=0)
    return math.fsum(np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1]))


def _trivial(pts: np.ndarray) -> Tour | None:
    n = len(pts)
    if n == 0:
        return Tour((), 0.0)
    if n == 1:
        return Tour((0,), 0.0)
    if n == 2:
        return Tour((0, 1), 2.0 * math.hypot(*(pts[1] - pts[0])))
    return None


def solve_exact(points, limit: int = EXACT_LIMIT) -> Tour:
    """Optimal tour by Held-Karp DP; ``3 <= len(points) <= limit``."""
    pts = as_points(points)
    n = len(pts)
    if not 3 <= n <= limit:
        raise ValueError("size limit")
    D = distance_matrix(pts)
    m = n - 1  # city 0 is the fixed start; subsets range over cities 1..n-1
    full = (1 << m) - 1
    dp = np.full((1 << m, m), np.inf)
    for j in range(m):
        dp[1 << j, j] = D[0, j + 1]
    Dm = D[1:, 1:]
    masks = np.arange(1 << m)
    popcount = np.array([bin(x).count("1") for x in range(1 << m)])
    member = ((masks[:, None] >> np.arange(m)) & 1).astype(bool)
    for size in range(1, m):
        layer = masks[popcount == size]
        # cand[s, i, j] = cost of ending at i in subset s, then stepping to j
        cand = dp[layer][:, :, None] + Dm[None, :, :]
        best = cand.min(axis=1)
        for j in range(m):
            ok = ~member[layer, j]
            if not ok.any():
                continue
            tgt = layer[ok] | (1 << j)
            np.minimum.at(dp[:, j], tgt, best[ok, j])
    closing = dp[full] + D[1:, 0]
    last = int(np.argmin(closing))
    length = float(closing[last])
    # walk the table backwards
    path = [last]
    mask = full
    while mask != (1 << path[-1]):
        j = path[-1]
        prev_mask = mask & ~(1 << j)
        i = int(np.argmin(dp[prev_mask] + Dm[:, j]))
        path.append(i)
        mask = prev_mask
    order = (0,) + tuple(p + 1 for p in reversed(path))
    return Tour(order, tour_length(pts, order))


def solve_brute_force(points) -> Tour:
    """Exhaustive search over permutations with city 0 fixed; for checking small cases."""
    pts = as_points(points)
    n = len(pts)
    triv = _trivial(pts)
    if triv is not None:
        return triv
    D = distance_matrix(pts)
    best, best_order = math.inf, None
    for perm in permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        length = sum(D[order[k], order[k + 1]] for k in range(n - 1)) + D[order[-1], 0]
        if length < best:
            best, best_order = length, order
    return Tour(best_order, tour_length(pts, best_order))


def nearest_neighbor_tour(D: np.ndarray, start: int) -> list[int]:
    n = len(D)
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        row = np.where(visited, np.inf, D[cur])
        cur = int(np.argmin(row))
        visited[cur] = True
        order.append(cur)
    return order


def _two_opt_full(D: np.ndarray, order: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Exhaustive 2-opt to local optimality (first improvement per position)."""
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            js = np.arange(i + 2, n if i > 0 else n - 1)
            if len(js) == 0:
                continue
            c = order[js]
            d = order[(js + 1) % n]
            gain = D[a, b] + D[c, d] - D[a, c] - D[b, d]
            k = int(np.argmax(gain))
            if gain[k] > eps:
                j = int(js[k])
                order[i + 1 : j + 1] = order[i + 1 : j + 1][::-1]
                improved = True
    return order


def _two_opt_neighbors(pts: np.ndarray, order: np.ndarray, k: int = NEIGHBOR_LIST_SIZE, eps: float = 1e-12) -> np.ndarray:
    """2-opt restricted to moves that connect a city to one of its ``k`` nearest."""
    n = len(order)
    index = build_index(pts, default_cell_size(pts))
    neigh, _ = index.knearest_many(np.arange(n), min(k, n - 1))

    def dist(u, v):
        return math.hypot(pts[u, 0] - pts[v, 0], pts[u, 1] - pts[v, 1])

    pos = np.empty(n, dtype=np.intp)
    pos[order] = np.arange(n)
    improved = True
    while improved:
        improved = False
        for a in range(n):
            for direction in (1, -1):
                i = pos[a]
                b = order[(i + direction) % n]
                d_ab = dist(a, b)
                for c in neigh[a]:
                    d_ac = dist(a, c)
                    if d_ac >= d_ab:
                        break
                    j = pos[c]
                    d = order[(j + direction) % n]
                    if c == b or d == a:
                        continue
                    gain = d_ab + dist(c, d) - d_ac - dist(b, d)
                    if gain > eps:
                        # successor case: reverse b..c; predecessor case: reverse a..d
                        lo, hi = (i + 1, j) if direction == 1 else (i, j - 1)
                        if lo > hi:
                            lo, hi = hi + 1, lo - 1
                        seg = order[lo : hi + 1][::-1].copy()
                        order[lo : hi + 1] = seg
                        pos[seg] = np.arange(lo, hi + 1)
                        improved = True
                        break
    return order


def two_opt(points, order, neighbor_lists: bool | None = None) -> np.ndarray:
    pts = as_points(points)
    order = np.array(order, dtype=np.intp)
    if len(order) < 4:
        return order
    if neighbor_lists is None:
        neighbor_lists = len(order) > NEIGHBOR_LIST_THRESHOLD
    if neighbor_lists:
        return _two_opt_neighbors(pts, order)
    return _two_opt_full(distance_matrix(pts), order)


def solve_heuristic(points, restarts: int = 1, seed: int = 0, neighbor_lists: bool | None = None) -> Tour:
    """Best of ``restarts`` nearest-neighbor + 2-opt runs from random start cities."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    pts = as_points(points)
    triv = _trivial(pts)
    if triv is not None:
        return triv
    n = len(pts)
    rng = trial_rng(seed, 0)
    starts = rng.permutation(n)[: min(restarts, n)]
    D = distance_matrix(pts) if n <= 4000 else None
    best: Tour | None = None
    for s in starts:
        if D is not None:
            order = nearest_neighbor_tour(D, int(s))
        else:
            order = _nn_tour_indexed(pts, int(s))
        order = two_opt(pts, order, neighbor_lists)
        t = Tour(tuple(int(x) for x in order), tour_length(pts, order))
        if best is None or t.length < best.length:
            best = t
    return best


def _nn_tour_indexed(pts: np.ndarray, start: int) -> list[int]:
    n = len(pts)
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        d = np.hypot(pts[:, 0] - pts[cur, 0], pts[:, 1] - pts[cur, 1])
        d[visited] = np.inf
        cur = int(np.argmin(d))
        visited[cur] = True
        order.append(cur)
    return order


def solve(points, mode: Mode = Mode.HEURISTIC, restarts: int = 1, seed: int = 0) -> Tour:
    pts = as_points(points)
    triv = _trivial(pts)
    if triv is not None:
        return triv
    if Mode(mode) is Mode.EXACT:
        return solve_exact(pts)
    return solve_heuristic(pts, restarts, seed)


def estimate_beta_hat(n: int, trials: int, mode: Mode = Mode.HEURISTIC, seed: int = 0,
                      restarts: int = 1) -> tuple[float, float]:
    """Mean and standard error of ``L / sqrt(n)`` over uniform instances on the unit square."""
    mode = Mode(mode)
    if n < 1:
        raise ValueError("n must be >= 1")
    if trials < 1:
        raise ValueError("trials must be positive")
    if mode is Mode.EXACT and n > EXACT_LIMIT:
        raise ValueError("size limit")
    vals = np.empty(trials)
    for t in range(trials):
        pts = trial_rng(seed, t).uniform(0.0, 1.0, size=(n, 2))
        tour = solve(pts, mode, restarts, seed=seed * 1_000_003 + t)
        vals[t] = tour.length / math.sqrt(n)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), se
