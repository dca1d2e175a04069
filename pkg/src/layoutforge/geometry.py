"""Planar geometry used by the relation measures.

All polygons are sequences of (x, y) tuples in counterclockwise order.
Everything here is pure float math on tuples; the hot solver loop calls
these thousands of times per second, so no numpy in this module.
"""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]
Polygon = Sequence[Point]

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap to [0, 2*pi)."""
    a = math.fmod(theta, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod can return 2*pi - eps rounding up to 2*pi exactly
    if a >= TWO_PI:
        a -= TWO_PI
    return a


def angle_diff(a: float, b: float) -> float:
    """Signed difference a - b wrapped to (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d <= -math.pi:
        d += TWO_PI
    elif d > math.pi:
        d -= TWO_PI
    return d


def polygon_area(poly: Polygon) -> float:
    """Signed shoelace area; positive for counterclockwise order."""
    n = len(poly)
    s = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return 0.5 * s


def polygon_centroid(poly: Polygon) -> Point:
    a = polygon_area(poly)
    if abs(a) < 1e-15:
        n = len(poly)
        return (sum(p[0] for p in poly) / n, sum(p[1] for p in poly) / n)
    cx = cy = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    return (cx / (6.0 * a), cy / (6.0 * a))


def is_convex_ccw(poly: Polygon, tol: float = 1e-12) -> bool:
    """True if the vertex list is convex and counterclockwise."""
    n = len(poly)
    if n < 3:
        return False
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        x2, y2 = poly[(i + 2) % n]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if cross < -tol:
            return False
    return polygon_area(poly) > tol


def point_in_convex(p: Point, poly: Polygon, tol: float = 1e-12) -> bool:
    """Point inside or on the boundary of a convex ccw polygon."""
    px, py = p
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1) < -tol:
            return False
    return True


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    denom = dx * dx + dy * dy
    if denom <= 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_polygon_distance(p: Point, poly: Polygon) -> float:
    """Distance from point to polygon boundary/interior (0 when inside)."""
    if point_in_convex(p, poly):
        return 0.0
    n = len(poly)
    return min(
        point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n)
    )


def _segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    def orient(a: Point, b: Point, c: Point) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    return False


def segment_segment_distance(p1: Point, p2: Point, p3: Point, p4: Point) -> float:
    if _segments_intersect(p1, p2, p3, p4):
        return 0.0
    return min(
        point_segment_distance(p1, p3, p4),
        point_segment_distance(p2, p3, p4),
        point_segment_distance(p3, p1, p2),
        point_segment_distance(p4, p1, p2),
    )


def convex_polygons_intersect(a: Polygon, b: Polygon, tol: float = 0.0) -> bool:
    """Separating-axis test over both polygons' edge normals.

    With tol = 0 touching counts as intersecting.
    """
    for poly1, poly2 in ((a, b), (b, a)):
        n = len(poly1)
        for i in range(n):
            x1, y1 = poly1[i]
            x2, y2 = poly1[(i + 1) % n]
            ax = y1 - y2
            ay = x2 - x1
            min1 = min2 = math.inf
            max1 = max2 = -math.inf
            for px, py in poly1:
                d = ax * px + ay * py
                if d < min1:
                    min1 = d
                if d > max1:
                    max1 = d
            for px, py in poly2:
                d = ax * px + ay * py
                if d < min2:
                    min2 = d
                if d > max2:
                    max2 = d
            if min1 > max2 + tol or min2 > max1 + tol:
                return False
    return True


def polygon_distance(a: Polygon, b: Polygon) -> float:
    """Minimum distance between two convex polygons; 0 if they intersect or touch."""
    if convex_polygons_intersect(a, b):
        return 0.0
    na, nb = len(a), len(b)
    best = math.inf
    for i in range(na):
        a1 = a[i]
        a2 = a[(i + 1) % na]
        for j in range(nb):
            d = segment_segment_distance(a1, a2, b[j], b[(j + 1) % nb])
            if d < best:
                best = d
    return best


RectFrame = tuple[float, float, float, float, float, float]  # cx, cy, cos, sin, hx, hy


def rect_frame(cx: float, cy: float, yaw_cos: float, yaw_sin: float, hx: float, hy: float) -> RectFrame:
    return (cx, cy, yaw_cos, yaw_sin, hx, hy)


def _rect_point_gap(frame: RectFrame, px: float, py: float) -> float:
    """Distance from a point to a rectangle (0 inside); local-frame clamp."""
    cx, cy, c, s, hx, hy = frame
    dx = px - cx
    dy = py - cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    du = abs(u) - hx
    dv = abs(v) - hy
    if du <= 0.0 and dv <= 0.0:
        return 0.0
    if du < 0.0:
        du = 0.0
    if dv < 0.0:
        dv = 0.0
    return math.hypot(du, dv)


def rect_rect_gap(fa: RectFrame, ca: Polygon, fb: RectFrame, cb: Polygon) -> float:
    """Exact distance between two rectangles given frames and corner lists.

    0 when they intersect or touch.  For disjoint convex polygons the
    closest pair lies on a vertex of one and a face of the other (parallel
    edge-edge contacts included, since an endpoint vertex attains the same
    perpendicular distance), so the minimum over the 8 vertex-to-rectangle
    clamps is the true polygon distance.
    """
    # separating-axis test on the 4 rectangle axes
    separated = False
    for frame, corners in ((fa, cb), (fb, ca)):
        cx, cy, c, s, hx, hy = frame
        umin = vmin = math.inf
        umax = vmax = -math.inf
        for px, py in corners:
            dx = px - cx
            dy = py - cy
            u = c * dx + s * dy
            v = -s * dx + c * dy
            if u < umin:
                umin = u
            if u > umax:
                umax = u
            if v < vmin:
                vmin = v
            if v > vmax:
                vmax = v
        if umin > hx or umax < -hx or vmin > hy or vmax < -hy:
            separated = True
            break
    if not separated:
        return 0.0
    best = math.inf
    for px, py in cb:
        d = _rect_point_gap(fa, px, py)
        if d < best:
            best = d
    for px, py in ca:
        d = _rect_point_gap(fb, px, py)
        if d < best:
            best = d
    return best


def clip_convex(subject: Polygon, clip: Polygon) -> list[Point]:
    """Sutherland-Hodgman intersection of two convex ccw polygons."""
    output: list[Point] = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        cx1, cy1 = clip[i]
        cx2, cy2 = clip[(i + 1) % n]
        ex = cx2 - cx1
        ey = cy2 - cy1
        inputs = output
        output = []
        prev = inputs[-1]
        prev_in = ex * (prev[1] - cy1) - ey * (prev[0] - cx1) >= 0.0
        for cur in inputs:
            cur_in = ex * (cur[1] - cy1) - ey * (cur[0] - cx1) >= 0.0
            if cur_in != prev_in:
                # edge crosses the clip line; append the intersection point
                dx = cur[0] - prev[0]
                dy = cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    t = (ey * (prev[0] - cx1) - ex * (prev[1] - cy1)) / denom
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(cur)
            prev = cur
            prev_in = cur_in
    return output


def intersection_area(a: Polygon, b: Polygon) -> float:
    """Area of the intersection of two convex ccw polygons."""
    inter = clip_convex(a, b)
    if len(inter) < 3:
        return 0.0
    return abs(polygon_area(inter))


def interval_overlap(lo_a: float, hi_a: float, lo_b: float, hi_b: float) -> float:
    return max(0.0, min(hi_a, hi_b) - max(lo_a, lo_b))


def bbox(poly: Polygon) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)
