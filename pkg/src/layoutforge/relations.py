"""Spatial relation measures and their soft/hard term wrappers.

Each measure maps object poses to a non-negative number; a RelationTerm
turns a measure into either a weighted score contribution (soft) or a
constraint violation (hard).  Distance, relative orientation, alignment,
proximity, overlap and symmetry form the user-facing relation protocol;
containment and collision are plumbing used by the auto-injected rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .geometry import (
    Point,
    RectFrame,
    angle_diff,
    interval_overlap,
    intersection_area,
    point_in_convex,
    point_polygon_distance,
    rect_rect_gap,
)
from .scene import Domain, Extent, Layout, Pose, TiltedObjectError, vertical_interval, world_footprint

# Default adjacency threshold for hard Proximity terms, meters.
EPS_PROX = 0.01


class RelationKind(Enum):
    DISTANCE = "distance"
    RELATIVE_ORIENTATION = "relative_orientation"
    ALIGNMENT = "alignment"
    PROXIMITY = "proximity"
    OVERLAP = "overlap"
    SYMMETRY = "symmetry"
    CONTAINMENT = "containment"
    COLLISION = "collision"


# Containment and collision keep layouts physical; they are not part of
# the six-relation protocol surface.
PLUMBING_KINDS = frozenset({RelationKind.CONTAINMENT, RelationKind.COLLISION})

_PAIR_KINDS = frozenset(
    {
        RelationKind.DISTANCE,
        RelationKind.RELATIVE_ORIENTATION,
        RelationKind.PROXIMITY,
        RelationKind.OVERLAP,
        RelationKind.COLLISION,
    }
)


class Comparator(Enum):
    LESS_EQ = "less_eq"
    GREATER_EQ = "greater_eq"
    WITHIN_TOL = "within_tol"


@dataclass(frozen=True)
class Soft:
    weight: float = 1.0


@dataclass(frozen=True)
class Hard:
    comparator: Comparator = Comparator.LESS_EQ
    # None resolves to the kind default: EPS_PROX for proximity, 0 otherwise.
    threshold: float | None = None
    tolerance: float = 0.0


@dataclass(frozen=True)
class RelationTerm:
    kind: RelationKind
    participants: tuple[str, ...]
    params: Mapping[str, object]
    mode: Soft | Hard

    def __post_init__(self) -> None:
        object.__setattr__(self, "participants", tuple(self.participants))
        object.__setattr__(self, "params", dict(self.params))
        n = len(self.participants)
        if self.kind in _PAIR_KINDS and n != 2:
            raise TermError(f"{self.kind.value} takes exactly 2 participants, got {n}")
        if self.kind in (RelationKind.ALIGNMENT, RelationKind.SYMMETRY) and n < 2:
            raise TermError(f"{self.kind.value} takes at least 2 participants, got {n}")
        if self.kind is RelationKind.CONTAINMENT and n != 1:
            raise TermError(f"containment takes exactly 1 participant, got {n}")
        if isinstance(self.mode, Soft):
            if not (math.isfinite(self.mode.weight) and self.mode.weight >= 0.0):
                raise TermError(f"soft weight must be finite and >= 0, got {self.mode.weight}")
        else:
            if self.mode.tolerance < 0.0:
                raise TermError(f"hard tolerance must be >= 0, got {self.mode.tolerance}")

    @property
    def is_soft(self) -> bool:
        return isinstance(self.mode, Soft)


class TermError(ValueError):
    """Malformed relation term or missing participant."""


class UnknownObjectError(TermError):
    """A term references an id absent from the layout."""


class UnpairableSetError(TermError):
    """Symmetry auto-pairing could not cover all participants."""


PlacedBox = tuple[Pose, Extent]


def _box_frame(pose: Pose, extent: Extent) -> RectFrame:
    if not pose.is_upright():
        raise TiltedObjectError("footprint undefined for tilted object")
    return (pose.x, pose.y, math.cos(pose.yaw), math.sin(pose.yaw), 0.5 * extent.dx, 0.5 * extent.dy)


def _footprint_gap(frame_a, corners_a, ia, frame_b, corners_b, ib) -> float:
    """Gap between two upright boxes given footprint frames and z-intervals."""
    d_xy = rect_rect_gap(frame_a, corners_a, frame_b, corners_b)
    g_z = max(ia[0] - ib[1], ib[0] - ia[1])
    if g_z <= 0.0:
        return d_xy
    return math.hypot(d_xy, g_z)


def measure_distance(a: PlacedBox, b: PlacedBox) -> float:
    """Gap between two upright oriented boxes, 0 when they touch or intersect."""
    return _footprint_gap(
        _box_frame(*a), world_footprint(*a), vertical_interval(*a),
        _box_frame(*b), world_footprint(*b), vertical_interval(*b),
    )


def measure_center_distance(a: PlacedBox, b: PlacedBox) -> float:
    pa, pb = a[0], b[0]
    return math.sqrt((pa.x - pb.x) ** 2 + (pa.y - pb.y) ** 2 + (pa.z - pb.z) ** 2)


def measure_rel_orientation(a: Pose, b: Pose, target: float = 0.0) -> float:
    """|wrap(yaw_b - yaw_a - target)| in [0, pi]."""
    return abs(angle_diff(b.yaw - a.yaw, target))


def measure_alignment(centers: Sequence[tuple[float, float]], axis: str) -> float:
    """Spread (sum of squared deviations) of the centers perpendicular to axis."""
    if axis not in ("x", "y"):
        raise TermError(f"alignment axis must be 'x' or 'y', got {axis!r}")
    idx = 1 if axis == "x" else 0
    vals = [c[idx] for c in centers]
    mean = sum(vals) / len(vals)
    return sum((v - mean) ** 2 for v in vals)


def measure_proximity(a: PlacedBox, b: PlacedBox) -> float:
    """Same gap as measure_distance; proximity differs only in term shaping."""
    return measure_distance(a, b)


def measure_gap_cached(cache: "EvalCache", id_a: str, id_b: str) -> float:
    return _footprint_gap(
        cache.frame(id_a), cache.footprint(id_a), cache.interval(id_a),
        cache.frame(id_b), cache.footprint(id_b), cache.interval(id_b),
    )


_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _axis_interval(pose: Pose, extent: Extent, axis_idx: int) -> tuple[float, float]:
    r = pose.rotation_matrix()
    row = r[axis_idx]
    h = (
        abs(row[0]) * 0.5 * extent.dx
        + abs(row[1]) * 0.5 * extent.dy
        + abs(row[2]) * 0.5 * extent.dz
    )
    c = (pose.x, pose.y, pose.z)[axis_idx]
    return (c - h, c + h)


def measure_overlap(a: PlacedBox, b: PlacedBox, axis: str) -> float:
    """Overlap length of the two boxes' corner projections on a world axis."""
    if axis not in _AXIS_INDEX:
        raise TermError(f"overlap axis must be one of x/y/z, got {axis!r}")
    i = _AXIS_INDEX[axis]
    lo_a, hi_a = _axis_interval(*a, i)
    lo_b, hi_b = _axis_interval(*b, i)
    return interval_overlap(lo_a, hi_a, lo_b, hi_b)


@dataclass(frozen=True)
class Reflection:
    point: Point
    normal: Point  # horizontal unit normal of the vertical mirror plane

    def apply(self, c: tuple[float, float, float]) -> tuple[float, float, float]:
        nx, ny = self.normal
        d = (c[0] - self.point[0]) * nx + (c[1] - self.point[1]) * ny
        return (c[0] - 2.0 * d * nx, c[1] - 2.0 * d * ny, c[2])


@dataclass(frozen=True)
class Rotational:
    center: Point
    order: int

    def apply(self, c: tuple[float, float, float]) -> tuple[float, float, float]:
        ang = 2.0 * math.pi / self.order
        ca, sa = math.cos(ang), math.sin(ang)
        dx = c[0] - self.center[0]
        dy = c[1] - self.center[1]
        return (self.center[0] + ca * dx - sa * dy, self.center[1] + sa * dx + ca * dy, c[2])


def measure_symmetry(
    items: Sequence[tuple[str, str, tuple[float, float, float]]],
    spec: Reflection | Rotational,
    pairs: Sequence[tuple[str, str]] | None = None,
    max_pair_distance: float = math.inf,
) -> float:
    """Total residual of the symmetry map over paired object centers.

    ``items`` are (id, category, center) triples.  With ``pairs=None`` the
    pairing is computed greedily: each transformed center matches the
    nearest unmatched participant of the same category; reflection pairs
    partition the set (no self-pairs), a rotational pairing is a
    permutation.  Matches beyond ``max_pair_distance`` are rejected.
    """
    by_id = {it[0]: it for it in items}
    if len(by_id) != len(items):
        raise TermError("symmetry participants must be distinct")

    if pairs is None:
        pairs = _auto_pair(items, spec, max_pair_distance)
    else:
        pairs = [tuple(p) for p in pairs]
        _check_cover(items, pairs, reflection=isinstance(spec, Reflection))

    total = 0.0
    for src, dst in pairs:
        if src not in by_id or dst not in by_id:
            raise UnknownObjectError(f"symmetry pair references unknown id {src!r}/{dst!r}")
        t = spec.apply(by_id[src][2])
        c = by_id[dst][2]
        total += math.sqrt((t[0] - c[0]) ** 2 + (t[1] - c[1]) ** 2 + (t[2] - c[2]) ** 2)
    return total


def _check_cover(items, pairs, reflection: bool) -> None:
    ids = [it[0] for it in items]
    if reflection:
        used: list[str] = []
        for a, b in pairs:
            if a == b:
                raise UnpairableSetError("reflection pairs cannot be self-pairs")
            used.extend((a, b))
        if sorted(used) != sorted(ids):
            raise UnpairableSetError("pairs must cover all participants exactly once")
    else:
        if sorted(p[0] for p in pairs) != sorted(ids) or sorted(p[1] for p in pairs) != sorted(ids):
            raise UnpairableSetError("rotational pairing must be a permutation of participants")


def _auto_pair(items, spec, max_pair_distance: float):
    reflection = isinstance(spec, Reflection)
    if reflection and len(items) % 2 != 0:
        raise UnpairableSetError("odd participant count cannot be reflection-paired")
    pairs: list[tuple[str, str]] = []
    consumed: set[str] = set()  # as targets (and as sources for reflection)
    for src_id, src_cat, src_center in items:
        if reflection and src_id in consumed:
            continue
        t = spec.apply(src_center)
        best = None
        best_d = math.inf
        for dst_id, dst_cat, dst_center in items:
            if dst_id in consumed or dst_cat != src_cat:
                continue
            if reflection and dst_id == src_id:
                continue
            d = math.sqrt(
                (t[0] - dst_center[0]) ** 2
                + (t[1] - dst_center[1]) ** 2
                + (t[2] - dst_center[2]) ** 2
            )
            if d < best_d:
                best = dst_id
                best_d = d
        if best is None or best_d > max_pair_distance:
            raise UnpairableSetError(
                f"no admissible symmetry partner for {src_id!r} (category {src_cat!r})"
            )
        consumed.add(best)
        if reflection:
            consumed.add(src_id)
        pairs.append((src_id, best))
    return pairs


def measure_containment(box: PlacedBox, domain: Domain) -> float:
    """Sum of footprint-corner excursions outside the domain plus height excess."""
    fp = world_footprint(*box)
    total = 0.0
    for corner in fp:
        if not point_in_convex(corner, domain.boundary):
            total += point_polygon_distance(corner, domain.boundary)
    _, z_hi = vertical_interval(*box)
    if z_hi > domain.height:
        total += z_hi - domain.height
    return total


def measure_collision(a: PlacedBox, b: PlacedBox) -> float:
    """Footprint intersection area when the vertical intervals overlap."""
    ia = vertical_interval(*a)
    ib = vertical_interval(*b)
    if interval_overlap(ia[0], ia[1], ib[0], ib[1]) <= 0.0:
        return 0.0
    return intersection_area(world_footprint(*a), world_footprint(*b))


@dataclass(frozen=True)
class TermResult:
    measure: float
    score: float | None = None  # soft terms
    violation: float | None = None  # hard terms

    @property
    def value(self) -> float:
        return self.score if self.score is not None else self.violation  # type: ignore[return-value]


def resolve_threshold(term: RelationTerm) -> float:
    mode = term.mode
    assert isinstance(mode, Hard)
    if mode.threshold is not None:
        return mode.threshold
    return EPS_PROX if term.kind is RelationKind.PROXIMITY else 0.0


class EvalCache:
    """Memoizes footprints and z-intervals for one layout.

    Sharing a cache across terms (and invalidating only moved ids inside
    the solver) yields bit-identical values to evaluating each term in
    isolation, because the cached entries are pure functions of the pose.
    """

    def __init__(self, layout: Layout, extents: Mapping[str, Extent]):
        self.layout = layout
        self.extents = extents
        self._footprints: dict[str, tuple] = {}
        self._intervals: dict[str, tuple[float, float]] = {}
        self._frames: dict[str, RectFrame] = {}

    def invalidate(self, object_id: str) -> None:
        self._footprints.pop(object_id, None)
        self._intervals.pop(object_id, None)
        self._frames.pop(object_id, None)

    def footprint(self, object_id: str):
        fp = self._footprints.get(object_id)
        if fp is None:
            fp = world_footprint(self.layout[object_id], self.extents[object_id])
            self._footprints[object_id] = fp
        return fp

    def frame(self, object_id: str) -> RectFrame:
        fr = self._frames.get(object_id)
        if fr is None:
            fr = _box_frame(self.layout[object_id], self.extents[object_id])
            self._frames[object_id] = fr
        return fr

    def interval(self, object_id: str) -> tuple[float, float]:
        iv = self._intervals.get(object_id)
        if iv is None:
            iv = vertical_interval(self.layout[object_id], self.extents[object_id])
            self._intervals[object_id] = iv
        return iv


def evaluate_term(
    term: RelationTerm,
    layout: Layout,
    domain: Domain,
    extents: Mapping[str, Extent],
    categories: Mapping[str, str] | None = None,
    cache: EvalCache | None = None,
) -> TermResult:
    """Measure a term on a layout and shape it into a score or violation."""
    for pid in term.participants:
        if pid not in layout:
            raise UnknownObjectError(f"unknown object {pid!r}")
        if pid not in extents:
            raise UnknownObjectError(f"no extent declared for {pid!r}")

    if cache is None:
        cache = EvalCache(layout, extents)
    measure = _raw_measure(term, layout, domain, extents, categories, cache)
    if isinstance(term.mode, Soft):
        return TermResult(measure, score=term.mode.weight * _shape(term, measure))

    thr = resolve_threshold(term)
    mode = term.mode
    if mode.comparator is Comparator.LESS_EQ:
        violation = max(0.0, measure - thr)
    elif mode.comparator is Comparator.GREATER_EQ:
        violation = max(0.0, thr - measure)
    else:
        violation = max(0.0, abs(measure - thr) - mode.tolerance)
    return TermResult(measure, violation=violation)


def _shape(term: RelationTerm, measure: float) -> float:
    if term.kind in (RelationKind.DISTANCE, RelationKind.OVERLAP):
        target = float(term.params.get("target", 0.0))
        return (measure - target) ** 2
    if term.kind is RelationKind.PROXIMITY:
        return measure * measure
    return measure


def _raw_measure(term, layout, domain, extents, categories, cache: EvalCache) -> float:
    kind = term.kind
    ids = term.participants
    box = lambda i: (layout[ids[i]], extents[ids[i]])

    if kind is RelationKind.DISTANCE:
        if term.params.get("metric", "gap") == "center":
            return measure_center_distance(box(0), box(1))
        return measure_gap_cached(cache, ids[0], ids[1])
    if kind is RelationKind.RELATIVE_ORIENTATION:
        target = float(term.params.get("target", 0.0))
        return measure_rel_orientation(layout[ids[0]], layout[ids[1]], target)
    if kind is RelationKind.ALIGNMENT:
        axis = str(term.params.get("axis", "x"))
        centers = [(layout[i].x, layout[i].y) for i in ids]
        return measure_alignment(centers, axis)
    if kind is RelationKind.PROXIMITY:
        return measure_gap_cached(cache, ids[0], ids[1])
    if kind is RelationKind.OVERLAP:
        axis = str(term.params.get("axis", "x"))
        return measure_overlap(box(0), box(1), axis)
    if kind is RelationKind.SYMMETRY:
        spec = _symmetry_spec(term.params)
        pairs = term.params.get("pairs")
        items = [
            (i, (categories or {}).get(i, ""), (layout[i].x, layout[i].y, layout[i].z))
            for i in ids
        ]
        return measure_symmetry(items, spec, pairs, max_pair_distance=domain.diagonal)
    if kind is RelationKind.CONTAINMENT:
        fp = cache.footprint(ids[0])
        total = 0.0
        for corner in fp:
            if not point_in_convex(corner, domain.boundary):
                total += point_polygon_distance(corner, domain.boundary)
        z_hi = cache.interval(ids[0])[1]
        if z_hi > domain.height:
            total += z_hi - domain.height
        return total
    if kind is RelationKind.COLLISION:
        ia = cache.interval(ids[0])
        ib = cache.interval(ids[1])
        if interval_overlap(ia[0], ia[1], ib[0], ib[1]) <= 0.0:
            return 0.0
        fa = cache.frame(ids[0])
        fb = cache.frame(ids[1])
        # bounding-circle reject before the polygon clip
        dx = fb[0] - fa[0]
        dy = fb[1] - fa[1]
        ra = math.hypot(fa[4], fa[5])
        rb = math.hypot(fb[4], fb[5])
        if dx * dx + dy * dy >= (ra + rb) * (ra + rb):
            return 0.0
        return intersection_area(cache.footprint(ids[0]), cache.footprint(ids[1]))
    raise TermError(f"unhandled relation kind {kind}")


def _symmetry_spec(params: Mapping[str, object]) -> Reflection | Rotational:
    if "normal" in params:
        q = params.get("point", (0.0, 0.0))
        nx, ny = params["normal"]  # type: ignore[misc]
        norm = math.hypot(nx, ny)
        if norm <= 0.0:
            raise TermError("symmetry normal must be nonzero")
        return Reflection((float(q[0]), float(q[1])), (nx / norm, ny / norm))
    if "order" in params:
        c = params.get("center", (0.0, 0.0))
        order = int(params["order"])  # type: ignore[arg-type]
        if order < 2:
            raise TermError("rotational symmetry order must be >= 2")
        return Rotational((float(c[0]), float(c[1])), order)
    raise TermError("symmetry params need either 'normal' (reflection) or 'order' (rotational)")
