"""Camera/object trajectories from structured commands.

A command names a scene-independent template (pan, orbit, dolly, crane,
static) and an anchor that places it relative to an object's bounding
box.  Conventions: an object's front is local +y rotated by its yaw;
up is +z; `right = cross(up, facing)`, which traverses pans left to
right as seen looking along the facing direction of the listed keyframes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .geometry import wrap_angle
from .scene import Extent, Pose, TiltedObjectError

Vec3 = tuple[float, float, float]

_FULL_CIRCLE_TOL = 1e-12


class Template(Enum):
    PAN = "pan"
    ORBIT = "orbit"
    DOLLY = "dolly"
    CRANE = "crane"
    STATIC = "static"


class AnchorRelation(Enum):
    IN_FRONT_OF = "in_front_of"
    BEHIND = "behind"
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    ABOVE = "above"
    CENTERED_ON = "centered_on"
    AROUND = "around"


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class Anchor:
    object_id: str
    relation: AnchorRelation
    distance: float | None = None  # None = Auto (1.5 * max footprint side)


@dataclass(frozen=True)
class Subject:
    kind: str  # "camera" | "object"
    object_id: str | None = None

    @staticmethod
    def camera() -> "Subject":
        return Subject("camera")

    @staticmethod
    def object(object_id: str) -> "Subject":
        return Subject("object", object_id)


@dataclass(frozen=True)
class TrajectoryCommand:
    template: Template
    frames: int
    anchor: Anchor
    subject: Subject = Subject("camera")
    span: float | None = None    # pan
    arc: float | None = None     # orbit, radians
    radius: float | None = None  # orbit; defaults to the anchor distance
    travel: float | None = None  # dolly
    rise: float | None = None    # crane
    yaw_hold: bool = False       # object subjects: keep base yaw

    def __post_init__(self) -> None:
        min_frames = 1 if self.template is Template.STATIC else 2
        if self.frames < min_frames:
            raise TrajectoryError(
                f"{self.template.value} needs at least {min_frames} frames, got {self.frames}"
            )
        required = {
            Template.PAN: ("span",),
            Template.ORBIT: ("arc",),
            Template.DOLLY: ("travel",),
            Template.CRANE: ("rise",),
            Template.STATIC: (),
        }[self.template]
        for name in required:
            v = getattr(self, name)
            if v is None or v <= 0.0:
                raise TrajectoryError(f"{self.template.value} requires positive {name}")
        if self.anchor.relation is AnchorRelation.AROUND and self.template is not Template.ORBIT:
            raise TrajectoryError("anchor relation 'around' is only valid with orbit")
        if self.anchor.distance is not None and self.anchor.distance <= 0.0:
            raise TrajectoryError("anchor distance must be positive")


@dataclass(frozen=True)
class AnchorFrame:
    origin: Vec3
    facing: Vec3
    center: Vec3  # anchored object's bounding-box center
    distance: float


@dataclass(frozen=True)
class Keyframe:
    t: float
    position: Vec3
    look_at: Vec3 | None = None  # camera subjects
    yaw: float | None = None     # object subjects


def anchor_frame(pose: Pose, extent: Extent, relation: AnchorRelation, distance: float | None = None) -> AnchorFrame:
    """Anchor point and facing derived from an object's bounding box.

    The object's front is local +y rotated by yaw; side anchors sit at the
    object's center height and face back toward it.  Auto distance is
    1.5 * max(dx, dy).
    """
    if not pose.is_upright():
        raise TiltedObjectError("anchor undefined for tilted object")
    d = 1.5 * max(extent.dx, extent.dy) if distance is None else float(distance)
    if d <= 0.0:
        raise TrajectoryError("anchor distance must be positive")
    front = (-math.sin(pose.yaw), math.cos(pose.yaw), 0.0)
    left = (-front[1], front[0], 0.0)  # cross(up, front)
    center = (pose.x, pose.y, pose.z)

    if relation is AnchorRelation.IN_FRONT_OF:
        offset, facing = front, _neg(front)
    elif relation is AnchorRelation.BEHIND:
        offset, facing = _neg(front), front
    elif relation is AnchorRelation.LEFT_OF:
        offset, facing = left, _neg(left)
    elif relation is AnchorRelation.RIGHT_OF:
        offset, facing = _neg(left), left
    elif relation is AnchorRelation.ABOVE:
        return AnchorFrame(
            (center[0], center[1], center[2] + d), (0.0, 0.0, -1.0), center, d
        )
    elif relation is AnchorRelation.CENTERED_ON:
        return AnchorFrame(center, front, center, d)
    elif relation is AnchorRelation.AROUND:
        return AnchorFrame(center, front, center, d)
    else:
        raise TrajectoryError(f"unknown anchor relation {relation}")
    origin = (center[0] + d * offset[0], center[1] + d * offset[1], center[2])
    return AnchorFrame(origin, facing, center, d)


def _neg(v: Vec3) -> Vec3:
    return (-v[0], -v[1], -v[2])


def build_trajectory(command: TrajectoryCommand, frame: AnchorFrame) -> list[Keyframe]:
    """Keyframes for the command placed at the anchor frame.

    Positions are uniform in normalized time; cameras look at the anchored
    object's center throughout.  A full-circle orbit samples the open
    interval so the first and last frames do not coincide.
    """
    n = command.frames
    ts = [0.0] if n == 1 else [k / (n - 1) for k in range(n)]
    template = command.template
    origin, facing, center = frame.origin, frame.facing, frame.center

    if template is Template.PAN:
        right = _cross((0.0, 0.0, 1.0), facing)  # traverse left -> right
        half = 0.5 * command.span
        positions = [
            (
                origin[0] + (2.0 * t - 1.0) * half * right[0],
                origin[1] + (2.0 * t - 1.0) * half * right[1],
                origin[2] + (2.0 * t - 1.0) * half * right[2],
            )
            for t in ts
        ]
    elif template is Template.ORBIT:
        radius = command.radius if command.radius is not None else frame.distance
        rel = (origin[0] - center[0], origin[1] - center[1])
        if math.hypot(*rel) > 1e-12:
            phi0 = math.atan2(rel[1], rel[0])
        else:
            phi0 = math.atan2(facing[1], facing[0])
        arc = command.arc
        full = abs(arc - 2.0 * math.pi) <= _FULL_CIRCLE_TOL
        positions = []
        for k, t in enumerate(ts):
            phi = phi0 + (arc * k / n if full else arc * t)
            positions.append(
                (center[0] + radius * math.cos(phi), center[1] + radius * math.sin(phi), center[2])
            )
    elif template is Template.DOLLY:
        start = (
            origin[0] - command.travel * facing[0],
            origin[1] - command.travel * facing[1],
            origin[2] - command.travel * facing[2],
        )
        positions = [
            (
                start[0] + t * (origin[0] - start[0]),
                start[1] + t * (origin[1] - start[1]),
                start[2] + t * (origin[2] - start[2]),
            )
            for t in ts
        ]
    elif template is Template.CRANE:
        positions = [(origin[0], origin[1], origin[2] + t * command.rise) for t in ts]
    elif template is Template.STATIC:
        positions = [origin for _ in ts]
    else:
        raise TrajectoryError(f"unknown template {template}")

    return [Keyframe(t, pos, look_at=center) for t, pos in zip(ts, positions)]


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def apply_to_object(
    keyframes: Sequence[Keyframe], object_id: str, base_yaw: float = 0.0, yaw_hold: bool = False
) -> list[Keyframe]:
    """Turn a geometric track into an object pose track.

    The object's yaw follows its heading: yaw = atan2(v_y, v_x) - pi/2, so
    the +y front aligns with the velocity (finite difference to the next
    keyframe; the last frame holds the previous heading).  With yaw_hold,
    or fewer than 2 keyframes, the base yaw is kept instead.
    """
    if not keyframes:
        raise TrajectoryError("empty keyframe track")
    if yaw_hold or len(keyframes) < 2:
        return [Keyframe(k.t, k.position, yaw=wrap_angle(base_yaw)) for k in keyframes]
    out: list[Keyframe] = []
    prev_yaw = wrap_angle(base_yaw)
    for i, k in enumerate(keyframes):
        if i < len(keyframes) - 1:
            nxt = keyframes[i + 1].position
            vx = nxt[0] - k.position[0]
            vy = nxt[1] - k.position[1]
            if math.hypot(vx, vy) > 1e-12:
                yaw = wrap_angle(math.atan2(vy, vx) - 0.5 * math.pi)
            else:
                yaw = prev_yaw
        else:
            yaw = prev_yaw
        out.append(Keyframe(k.t, k.position, yaw=yaw))
        prev_yaw = yaw
    return out


def format_track(keyframes: Sequence[Keyframe], subject: str, fps: float) -> str:
    """Serialize a track to the line-delimited keyframe format.

    One header line `# layoutforge-track subject=<s> fps=<fps>`, then one
    record per keyframe: `frame_index x y z lookat_x lookat_y lookat_z`
    for camera tracks or `frame_index x y z yaw` for object tracks, with
    frame_index = round(t * (frames - 1)).
    """
    if fps <= 0:
        raise TrajectoryError("fps must be positive")
    if not keyframes:
        raise TrajectoryError("empty keyframe track")
    n = len(keyframes)
    lines = [f"# layoutforge-track subject={subject} fps={_fmt(fps)}"]
    for k in keyframes:
        idx = round(k.t * (n - 1))
        fields = [str(idx), _fmt(k.position[0]), _fmt(k.position[1]), _fmt(k.position[2])]
        if k.yaw is not None:
            fields.append(_fmt(k.yaw))
        elif k.look_at is not None:
            fields.extend(_fmt(v) for v in k.look_at)
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def export_track(
    keyframes: Sequence[Keyframe], subject: str, fps: float, path, fmt: str = "text"
) -> None:
    """Write the track file (see format_track for the schema)."""
    if fmt != "text":
        raise TrajectoryError(f"unknown track format {fmt!r}")
    data = format_track(keyframes, subject, fps)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)


def _fmt(v: float) -> str:
    return repr(float(v))
