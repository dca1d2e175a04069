"""Discretized pose grids shared by the snap-move solver mode and the oracle.

Candidates are cell centers of a step-sized lattice anchored at the domain
bounding box, strictly inside the boundary, further filtered so the
object's footprint at the candidate yaw fits the domain exactly
(containment measure 0).  The same enumeration backs `oracle_solve` and
the solver's snap moves, which is what makes the equivalence tests exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .relations import measure_containment
from .scene import Domain, Extent, Pose

DEFAULT_YAWS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


@dataclass(frozen=True)
class GridSpec:
    xy_step: float
    yaw_set: tuple[float, ...] = DEFAULT_YAWS
    max_objects: int = 3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.xy_step) and self.xy_step > 0.0):
            raise ValueError("grid xy_step must be positive")
        if not self.yaw_set:
            raise ValueError("grid yaw_set must be non-empty")
        object.__setattr__(self, "yaw_set", tuple(sorted(self.yaw_set)))


def cell_centers(domain: Domain, step: float) -> list[tuple[float, float]]:
    """Lattice cell centers strictly inside the domain polygon, sorted by (x, y)."""
    xs = [p[0] for p in domain.boundary]
    ys = [p[1] for p in domain.boundary]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    nx = int(math.floor((xmax - xmin) / step))
    ny = int(math.floor((ymax - ymin) / step))
    out = []
    for i in range(nx + 1):
        x = xmin + (i + 0.5) * step
        if x >= xmax:
            continue
        for j in range(ny + 1):
            y = ymin + (j + 0.5) * step
            if y >= ymax:
                continue
            if _strictly_inside((x, y), domain):
                out.append((x, y))
    return out


def _strictly_inside(p, domain: Domain) -> bool:
    px, py = p
    b = domain.boundary
    n = len(b)
    for i in range(n):
        x1, y1 = b[i]
        x2, y2 = b[(i + 1) % n]
        if (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1) <= 0.0:
            return False
    return True


@dataclass(frozen=True)
class ObjectCandidates:
    """Admissible grid poses for one object at a fixed support height."""

    object_id: str
    z: float
    # all admissible (x, y, yaw), sorted lexicographically
    poses: tuple[tuple[float, float, float], ...]
    # yaw -> admissible cells, cell -> admissible yaws (snap-move lookups)
    cells_by_yaw: dict[float, tuple[tuple[float, float], ...]]
    yaws_by_cell: dict[tuple[float, float], tuple[float, ...]]


def candidates_for(
    object_id: str,
    extent: Extent,
    z: float,
    domain: Domain,
    grid: GridSpec,
) -> ObjectCandidates:
    """Enumerate admissible (x, y, yaw) grid poses for one object.

    A candidate is admissible when the footprint at that yaw lies fully
    inside the domain (containment measure exactly 0).  If no candidate
    passes the footprint filter, the unfiltered in-domain cells are used
    instead so infeasible instances still enumerate (and report their
    violations) rather than erroring out.
    """
    centers = cell_centers(domain, grid.xy_step)
    poses: list[tuple[float, float, float]] = []
    cells_by_yaw: dict[float, list[tuple[float, float]]] = {y: [] for y in grid.yaw_set}
    for x, y in centers:
        for yaw in grid.yaw_set:
            pose = Pose(x, y, z, yaw=yaw)
            if measure_containment((pose, extent), domain) == 0.0:
                poses.append((x, y, yaw))
                cells_by_yaw[yaw].append((x, y))
    if not poses:
        poses = [(x, y, yaw) for x, y in centers for yaw in grid.yaw_set]
        cells_by_yaw = {
            yaw: [(x, y) for x, y in centers] for yaw in grid.yaw_set
        }
    poses.sort()
    yaws_by_cell: dict[tuple[float, float], list[float]] = {}
    for x, y, yaw in poses:
        yaws_by_cell.setdefault((x, y), []).append(yaw)
    return ObjectCandidates(
        object_id=object_id,
        z=z,
        poses=tuple(poses),
        cells_by_yaw={k: tuple(v) for k, v in cells_by_yaw.items()},
        yaws_by_cell={k: tuple(sorted(v)) for k, v in yaws_by_cell.items()},
    )
