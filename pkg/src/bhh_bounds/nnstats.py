"""Nearest-neighbor records, triangle events and stub-accounting estimators.

Each core point of a :class:`~bhh_bounds.poisson.PointSample` gets an
:class:`NNRecord` holding the distances ``r1 <= r2 <= r3`` to its three
nearest points. Two event predicates single out centers whose two nearest
neighbors are forced into a 3-cycle of the two-nearest-neighbor graph; each
such triangle has a guaranteed extra length (its *correction*) that a real
tour must pay on top of the stub lower bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .geometry import NeighborIndex, build_index
from .poisson import PointSample, core_points


class Variant(str, enum.Enum):
    HALF_PLANE = "HalfPlane"
    QUADRANT = "Quadrant"


class Policy(str, enum.Enum):
    HALF_PLANE_ONLY = "HalfPlaneOnly"
    QUADRANT_MIX = "QuadrantMix"


class Counting(str, enum.Enum):
    # sum the correction over every event center, then divide by 3
    THIRDS = "thirds"
    # one correction per distinct triangle {a, b, c}
    DEDUP = "dedup"


class NNRecord(NamedTuple):
    center: int
    neighbors: tuple[int, int, int]
    r1: float
    r2: float
    r3: float


@dataclass(frozen=True)
class NNTable:
    """Column-oriented NN records for all core points of one sample."""

    center: np.ndarray
    neighbors: np.ndarray  # (m, 3)
    r: np.ndarray  # (m, 3)

    def __len__(self) -> int:
        return len(self.center)

    def __iter__(self) -> Iterator[NNRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def __getitem__(self, i: int) -> NNRecord:
        return self.record(i)

    def record(self, i: int) -> NNRecord:
        nb = self.neighbors[i]
        r = self.r[i]
        return NNRecord(int(self.center[i]), (int(nb[0]), int(nb[1]), int(nb[2])), float(r[0]), float(r[1]), float(r[2]))

    @property
    def r1(self) -> np.ndarray:
        return self.r[:, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.r[:, 1]

    @property
    def r3(self) -> np.ndarray:
        return self.r[:, 2]


@dataclass(frozen=True)
class TriangleEvent:
    a: int
    b: int
    c: int
    d: int
    variant: Variant
    correction: float
    r1: float
    r2: float
    r3: float

    @property
    def triple(self) -> tuple[int, int, int]:
        return tuple(sorted((self.a, self.b, self.c)))


@dataclass(frozen=True)
class BoundEstimate:
    plain_sum: float
    correction_sum: float
    n_core: int
    scaled_plain: float
    scaled_corrected: float
    n_events: int = 0
    n_triples: int = 0


def sample_index(sample: PointSample) -> NeighborIndex:
    """Grid index over the whole sample with about two points per cell."""
    return build_index(sample.points, math.sqrt(2.0 / sample.intensity))


def nn_records(sample: PointSample, index: NeighborIndex | None = None) -> NNTable:
    """Three-nearest-neighbor records for every core point.

    Neighbors are searched among all points of the sample, pad included.
    """
    if len(sample) < 4:
        raise ValueError("insufficient points")
    index = index or sample_index(sample)
    core = core_points(sample)
    nb, d = index.knearest_many(core, 3)
    return NNTable(center=core, neighbors=nb, r=d)


# -- predicates ---------------------------------------------------------------


def half_plane_mask(r1, r2, r3):
    return np.asarray(r3) >= np.asarray(r1) + 2.0 * np.asarray(r2)


def quadrant_radius_mask(r1, r2, r3):
    r1, r2, r3 = np.asarray(r1), np.asarray(r2), np.asarray(r3)
    return r3 >= r2 + np.hypot(r1, r2)


def half_plane_correction(r1, r2, r3):
    return r3 - 1.5 * r1 - 1.5 * r2


def quadrant_correction(r1, r2, r3):
    return r3 - 0.5 * r1 - 0.5 * r2 - np.hypot(r1, r2)


def event_half_plane(rec: NNRecord) -> bool:
    """True iff ``r3 >= r1 + 2 r2``."""
    return bool(half_plane_mask(rec.r1, rec.r2, rec.r3))


def toward_b(points: np.ndarray, a, b, c):
    """Whether ``c`` lies in the closed half-plane through ``a`` facing ``b``."""
    pa, pb, pc = points[a], points[b], points[c]
    return np.einsum("...i,...i->...", pc - pa, pb - pa) >= 0.0


def event_quadrant(sample: PointSample, rec: NNRecord) -> bool:
    """True iff ``<c - a, b - a> >= 0`` and ``r3 >= r2 + sqrt(r1^2 + r2^2)``."""
    a, (b, c, _) = rec.center, rec.neighbors
    return bool(toward_b(sample.points, a, b, c)) and bool(quadrant_radius_mask(rec.r1, rec.r2, rec.r3))


def _event_arrays(sample: PointSample, table: NNTable, variant: Variant):
    """Mask and correction per record for one variant."""
    r1, r2, r3 = table.r1, table.r2, table.r3
    if variant is Variant.HALF_PLANE:
        return half_plane_mask(r1, r2, r3), half_plane_correction(r1, r2, r3)
    side = toward_b(sample.points, table.center, table.neighbors[:, 0], table.neighbors[:, 1])
    return side & quadrant_radius_mask(r1, r2, r3), quadrant_correction(r1, r2, r3)


def _events_from(sample, table, mask, corr, variants) -> list[TriangleEvent]:
    out = []
    for i in np.flatnonzero(mask):
        rec = table.record(i)
        out.append(
            TriangleEvent(
                a=rec.center, b=rec.neighbors[0], c=rec.neighbors[1], d=rec.neighbors[2],
                variant=variants[i], correction=float(corr[i]), r1=rec.r1, r2=rec.r2, r3=rec.r3,
            )
        )
    return out


def _dedup(events: list[TriangleEvent]) -> list[TriangleEvent]:
    # Keep the smallest correction per triangle; the bound stays valid for any choice.
    best: dict[tuple[int, int, int], TriangleEvent] = {}
    for ev in events:
        cur = best.get(ev.triple)
        if cur is None or ev.correction < cur.correction:
            best[ev.triple] = ev
    return sorted(best.values(), key=lambda e: e.triple)


def center_events(sample: PointSample, variant: Variant | Policy = Variant.HALF_PLANE,
                  table: NNTable | None = None) -> list[TriangleEvent]:
    """One event per qualifying core center, without deduplication.

    ``Policy.QUADRANT_MIX`` applies the quadrant predicate when ``c`` lies
    toward ``b`` and the half-plane predicate otherwise.
    """
    table = table if table is not None else nn_records(sample)
    if variant in (Variant.HALF_PLANE, Policy.HALF_PLANE_ONLY):
        mask, corr = _event_arrays(sample, table, Variant.HALF_PLANE)
        kinds = [Variant.HALF_PLANE] * len(table)
    elif variant is Variant.QUADRANT:
        mask, corr = _event_arrays(sample, table, Variant.QUADRANT)
        kinds = [Variant.QUADRANT] * len(table)
    elif variant is Policy.QUADRANT_MIX:
        side = toward_b(sample.points, table.center, table.neighbors[:, 0], table.neighbors[:, 1])
        hm, hc = _event_arrays(sample, table, Variant.HALF_PLANE)
        qm = quadrant_radius_mask(table.r1, table.r2, table.r3)
        qc = quadrant_correction(table.r1, table.r2, table.r3)
        mask = np.where(side, qm, hm)
        corr = np.where(side, qc, hc)
        kinds = [Variant.QUADRANT if s else Variant.HALF_PLANE for s in side.tolist()]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return _events_from(sample, table, mask, corr, kinds)


def detect_triangles(sample: PointSample, variant: Variant | Policy = Variant.HALF_PLANE,
                     table: NNTable | None = None) -> list[TriangleEvent]:
    """Triangle events, each unordered triple ``{a, b, c}`` reported once."""
    return _dedup(center_events(sample, variant, table))


def verify_triangle_closure(sample: PointSample, ev: TriangleEvent, index: NeighborIndex | None = None) -> bool:
    """Brute-force check that ``a``, ``b`` and ``c`` are each other's two nearest points."""
    index = index or sample_index(sample)
    tri = {ev.a, ev.b, ev.c}
    for p in tri:
        near = {i for i, _ in index.knearest(p, 2)}
        if near != tri - {p}:
            return False
    return True


def closure_all(sample: PointSample, events: list[TriangleEvent], index: NeighborIndex) -> np.ndarray:
    """Vectorized :func:`verify_triangle_closure` over many events."""
    if not events:
        return np.zeros(0, dtype=bool)
    tri = np.array([[e.a, e.b, e.c] for e in events])
    nb, _ = index.knearest_many(tri.ravel(), 2)
    nb = np.sort(nb.reshape(len(events), 3, 2), axis=-1)
    expect = np.stack([np.sort(tri[:, [1, 2]], axis=1), np.sort(tri[:, [0, 2]], axis=1), np.sort(tri[:, [0, 1]], axis=1)], axis=1)
    return np.all(nb == expect, axis=(1, 2))


# -- estimators -------------------------------------------------------------


def _normalizer(sample: PointSample) -> float:
    return math.sqrt(sample.intensity) * sample.window.core_area


def stub_lower_bound(sample: PointSample, table: NNTable | None = None) -> BoundEstimate:
    """Half the distances to the two nearest neighbors, summed over core points."""
    table = table if table is not None else nn_records(sample)
    plain = 0.5 * math.fsum(table.r1 + table.r2) if len(table) else 0.0
    scaled = plain / _normalizer(sample)
    return BoundEstimate(plain, 0.0, len(table), scaled, scaled)


def corrected_lower_bound(
    sample: PointSample,
    policy: Policy = Policy.HALF_PLANE_ONLY,
    counting: Counting = Counting.THIRDS,
    table: NNTable | None = None,
) -> BoundEstimate:
    """Stub bound plus the triangle corrections.

    With ``Counting.THIRDS`` the correction of every event center is summed
    and divided by three (each triangle has three potential centers); with
    ``Counting.DEDUP`` each distinct triangle contributes once.
    """
    policy = Policy(policy)
    counting = Counting(counting)
    table = table if table is not None else nn_records(sample)
    plain = stub_lower_bound(sample, table)
    events = center_events(sample, policy, table)
    triples = _dedup(events)
    if counting is Counting.THIRDS:
        corr = math.fsum(e.correction for e in events) / 3.0
    else:
        corr = math.fsum(e.correction for e in triples)
    return BoundEstimate(
        plain_sum=plain.plain_sum,
        correction_sum=corr,
        n_core=plain.n_core,
        scaled_plain=plain.scaled_plain,
        scaled_corrected=plain.scaled_plain + corr / _normalizer(sample),
        n_events=len(events),
        n_triples=len(triples),
    )
