"""Core geometric data model: poses, oriented boxes, object trees, domains.

Conventions (shared by every module):
  * units are meters and radians; angles are stored wrapped to [0, 2*pi)
  * Euler order is intrinsic yaw (about z), then pitch (about y), then
    roll (about x), i.e. R = Rz(yaw) @ Ry(pitch) @ Rx(roll)
  * an object's pose locates its bounding-box center; the box has full
    side lengths (dx, dy, dz) in the object's local frame
  * local +y is the object's front (used by trajectory anchoring)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import (
    Point,
    is_convex_ccw,
    point_in_convex,
    polygon_area,
    wrap_angle,
)

UPRIGHT_TOL = 1e-9


class SceneError(ValueError):
    """Invalid geometric input."""


class TiltedObjectError(SceneError):
    """Raised by footprint-based operations on objects with pitch/roll."""


@dataclass(frozen=True)
class Pose:
    """Position of a box center plus Euler orientation, angles in [0, 2*pi)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "z", "yaw", "pitch", "roll"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise SceneError(f"non-finite pose field {name}={v!r}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))
        object.__setattr__(self, "pitch", wrap_angle(self.pitch))
        object.__setattr__(self, "roll", wrap_angle(self.roll))

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def is_upright(self, tol: float = UPRIGHT_TOL) -> bool:
        return (
            min(self.pitch, 2.0 * math.pi - self.pitch) <= tol
            and min(self.roll, 2.0 * math.pi - self.roll) <= tol
        )

    def rotation_matrix(self) -> tuple[tuple[float, float, float], ...]:
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cr, sr = math.cos(self.roll), math.sin(self.roll)
        # Rz(yaw) @ Ry(pitch) @ Rx(roll)
        return (
            (cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr),
            (sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr),
            (-sp, cp * sr, cp * cr),
        )


IDENTITY_POSE = Pose()


@dataclass(frozen=True)
class Extent:
    """Full side lengths of an object's bounding box in its local frame.

    Positivity is enforced at ingestion and by validate_tree, not here,
    so that invalid trees can still be constructed and diagnosed.
    """

    dx: float
    dy: float
    dz: float

    def is_valid(self) -> bool:
        return (
            math.isfinite(self.dx)
            and math.isfinite(self.dy)
            and math.isfinite(self.dz)
            and self.dx > 0.0
            and self.dy > 0.0
            and self.dz > 0.0
        )

    @property
    def footprint_area(self) -> float:
        return self.dx * self.dy


@dataclass(frozen=True)
class ObjectNode:
    """One object in the scene tree; children rest on this object's top face."""

    id: str
    category: str
    extent: Extent
    local_pose: Pose = IDENTITY_POSE
    fixed: bool = False
    children: tuple["ObjectNode", ...] = field(default_factory=tuple)

    def walk(self):
        """Depth-first iteration over this node and all descendants."""
        yield self
        for child in self.children:
            yield from child.walk()

    def with_local_pose(self, pose: Pose) -> "ObjectNode":
        return replace(self, local_pose=pose)

    def with_children(self, children: tuple["ObjectNode", ...]) -> "ObjectNode":
        return replace(self, children=children)


@dataclass(frozen=True)
class Domain:
    """Room region: convex ccw ground polygon plus a ceiling height."""

    boundary: tuple[Point, ...]
    height: float

    def __post_init__(self) -> None:
        if len(self.boundary) < 3:
            raise SceneError("domain boundary needs at least 3 vertices")
        if not is_convex_ccw(self.boundary):
            raise SceneError("domain boundary must be convex and counterclockwise")
        if not (math.isfinite(self.height) and self.height > 0.0):
            raise SceneError("domain height must be positive")

    def contains_point(self, p: Point) -> bool:
        return point_in_convex(p, self.boundary)

    @property
    def diagonal(self) -> float:
        xs = [p[0] for p in self.boundary]
        ys = [p[1] for p in self.boundary]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys))

    @property
    def area(self) -> float:
        return polygon_area(self.boundary)


# A layout is a plain mapping object id -> Pose for one subproblem.
Layout = dict[str, Pose]


def compose_pose(parent: Pose, child_local: Pose) -> Pose:
    """World pose of a child given its parent's pose and its local pose.

    Rotations compose as yaw-pitch-roll matrices; the translated position
    is parent.position + R_parent @ child.position.  Euler angles are
    re-extracted from the composed matrix and wrapped to [0, 2*pi).
    """
    r = parent.rotation_matrix()
    cx, cy, cz = child_local.x, child_local.y, child_local.z
    px = parent.x + r[0][0] * cx + r[0][1] * cy + r[0][2] * cz
    py = parent.y + r[1][0] * cx + r[1][1] * cy + r[1][2] * cz
    pz = parent.z + r[2][0] * cx + r[2][1] * cy + r[2][2] * cz

    if (
        parent.pitch == 0.0
        and parent.roll == 0.0
        and child_local.pitch == 0.0
        and child_local.roll == 0.0
    ):
        # exact fast path: pure yaw composition
        return Pose(px, py, pz, yaw=parent.yaw + child_local.yaw)

    c = child_local.rotation_matrix()
    m = tuple(
        tuple(sum(r[i][k] * c[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )
    yaw, pitch, roll = _euler_from_matrix(m)
    return Pose(px, py, pz, yaw=yaw, pitch=pitch, roll=roll)


def _euler_from_matrix(m) -> tuple[float, float, float]:
    sp = -m[2][0]
    sp = max(-1.0, min(1.0, sp))
    pitch = math.asin(sp)
    if abs(sp) < 1.0 - 1e-12:
        yaw = math.atan2(m[1][0], m[0][0])
        roll = math.atan2(m[2][1], m[2][2])
    else:
        # gimbal lock: fold roll into yaw
        yaw = math.atan2(-m[0][1], m[1][1])
        roll = 0.0
    return yaw, pitch, roll


def world_footprint(pose: Pose, extent: Extent) -> tuple[Point, Point, Point, Point]:
    """Ground-plane corners of the upright box, counterclockwise.

    Only defined for upright objects (pitch = roll = 0); the yaw-only
    projection of a tilted box would not be its true silhouette.
    """
    if not pose.is_upright():
        raise TiltedObjectError("footprint undefined for tilted object")
    c = math.cos(pose.yaw)
    s = math.sin(pose.yaw)
    hx = 0.5 * extent.dx
    hy = 0.5 * extent.dy
    corners = ((hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy))
    return tuple(
        (pose.x + c * ux - s * uy, pose.y + s * ux + c * uy) for ux, uy in corners
    )


def vertical_interval(pose: Pose, extent: Extent) -> tuple[float, float]:
    """[z - dz/2, z + dz/2] covered by the box."""
    h = 0.5 * extent.dz
    return (pose.z - h, pose.z + h)


def support_z(parent_extent: Extent | None, child_extent: Extent) -> float:
    """Local z that rests the child's bottom on its parent's top face.

    Children of the domain frame rest on the floor (z = 0); children of an
    object rest on that object's top face, which sits at +dz/2 in the
    parent's local frame because poses locate box centers.
    """
    base = 0.0 if parent_extent is None else 0.5 * parent_extent.dz
    return base + 0.5 * child_extent.dz


@dataclass(frozen=True)
class TreeDiagnostic:
    node_id: str
    code: str
    message: str


@dataclass(frozen=True)
class TreeReport:
    diagnostics: tuple[TreeDiagnostic, ...]
    root: ObjectNode

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def validate_tree(root: ObjectNode, domain: Domain) -> TreeReport:
    """Check a scene tree and apply the support rule to every local pose.

    Reports duplicate ids, non-positive extents, and children whose
    footprint area exceeds their parent's top surface.  The returned tree
    has every node's local z replaced by its support height.
    """
    diagnostics: list[TreeDiagnostic] = []
    seen: set[str] = set()

    def visit(node: ObjectNode, parent_extent: Extent | None) -> ObjectNode:
        if node.id in seen:
            diagnostics.append(
                TreeDiagnostic(node.id, "duplicate-id", f"id {node.id!r} used more than once")
            )
        seen.add(node.id)
        if not node.extent.is_valid():
            diagnostics.append(
                TreeDiagnostic(
                    node.id,
                    "bad-extent",
                    f"extent must be positive, got ({node.extent.dx}, {node.extent.dy}, {node.extent.dz})",
                )
            )
        if parent_extent is not None and node.extent.footprint_area > parent_extent.footprint_area:
            diagnostics.append(
                TreeDiagnostic(
                    node.id,
                    "child-larger-than-parent",
                    "child footprint area exceeds parent top surface",
                )
            )
        z = support_z(parent_extent, node.extent)
        pose = replace(node.local_pose, z=z)
        children = tuple(visit(c, node.extent) for c in node.children)
        return replace(node, local_pose=pose, children=children)

    new_children = tuple(visit(c, None) for c in root.children)
    new_root = root.with_children(new_children)
    return TreeReport(tuple(diagnostics), new_root)
