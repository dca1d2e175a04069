"""Layout documents and the top-down SVG rendering.

Both outputs are deterministic byte-for-byte for identical inputs: object
order is tree DFS order, JSON key order is fixed, and floats use their
shortest round-trip representation.
"""

from __future__ import annotations

import json
import math
from typing import Mapping

from .scene import Domain, ObjectNode, Pose, world_footprint
from .solver import HierarchicalResult, Solution, world_poses

SVG_SCALE = 100.0  # px per meter
SVG_MARGIN = 0.5   # meters of padding around the domain


def _pose_doc(p: Pose) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z, "yaw": p.yaw, "pitch": p.pitch, "roll": p.roll}


def layout_document(result: HierarchicalResult) -> dict:
    """Per-object local/world poses plus per-level objective breakdowns."""
    root = result.root
    wp = world_poses(root)
    level_feasible: dict[str | None, bool] = {
        lv.parent_id: lv.solution.feasible for lv in result.levels
    }

    levels = []
    for lv in result.levels:
        s = lv.solution
        levels.append(
            {
                "parent": lv.parent_id,
                "objective": s.breakdown.objective,
                "total_violation": s.breakdown.total_violation,
                "feasible": s.feasible,
                "evals_used": s.evals_used,
                "restart_index": s.restart_index,
            }
        )

    objects = []

    def visit(node: ObjectNode, parent_id: str | None) -> None:
        level_key = parent_id  # the level this object was solved in
        objects.append(
            {
                "id": node.id,
                "parent": parent_id,
                "category": node.category,
                "dims": [node.extent.dx, node.extent.dy, node.extent.dz],
                "fixed": node.fixed,
                "local_pose": _pose_doc(node.local_pose),
                "world_pose": _pose_doc(wp[node.id]),
                "level_feasible": level_feasible.get(level_key, True),
            }
        )
        for child in node.children:
            visit(child, node.id)

    for child in root.children:
        visit(child, None)

    return {
        "version": 1,
        "feasible": result.all_feasible,
        "levels": levels,
        "objects": objects,
    }


def format_layout(result: HierarchicalResult) -> str:
    return json.dumps(layout_document(result), indent=2) + "\n"


def write_layout(result: HierarchicalResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_layout(result))


def format_trace(solutions: Mapping[str | None, Solution]) -> str:
    """Line-delimited trace records across levels.

    Fields: level parent id (or "-" for the root level), restart index,
    eval index, temperature, augmented objective, best-so-far augmented
    objective (non-increasing within a restart by construction).
    """
    lines = ["# layoutforge-trace v1: level restart eval temperature objective best"]
    for key, sol in solutions.items():
        label = "-" if key is None else key
        for rec in sol.trace:
            lines.append(
                f"{label} {rec.restart_index} {rec.eval_index} "
                f"{rec.temperature!r} {rec.augmented!r} {rec.best_augmented!r}"
            )
    return "\n".join(lines) + "\n"


def _page_transform(domain: Domain):
    xs = [p[0] for p in domain.boundary]
    ys = [p[1] for p in domain.boundary]
    xmin, ymax = min(xs) - SVG_MARGIN, max(ys) + SVG_MARGIN
    width = (max(xs) - min(xs) + 2 * SVG_MARGIN) * SVG_SCALE
    height = (max(ys) - min(ys) + 2 * SVG_MARGIN) * SVG_SCALE

    def to_page(p):
        return ((p[0] - xmin) * SVG_SCALE, (ymax - p[1]) * SVG_SCALE)

    return to_page, width, height


def render_svg_text(result: HierarchicalResult, domain: Domain) -> str:
    """Top-down orthographic drawing of the solved scene.

    Page transform: px = (x - xmin + margin) * 100, py = (ymax + margin - y) * 100
    (y flipped, 100 px per meter).  Elements appear in tree DFS order.
    """
    to_page, width, height = _page_transform(domain)

    def pts(points) -> str:
        return " ".join(f"{x:.4f},{y:.4f}" for x, y in (to_page(p) for p in points))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.4f} {height:.4f}">',
        f"<!-- top-down view; page = ((x - xmin + {SVG_MARGIN}) * {SVG_SCALE:.0f}, "
        f"(ymax + {SVG_MARGIN} - y) * {SVG_SCALE:.0f}) -->",
        f'<polygon class="domain" points="{pts(domain.boundary)}" '
        'fill="none" stroke="#444" stroke-width="2"/>',
    ]

    wp = world_poses(result.root)

    def visit(node: ObjectNode) -> None:
        pose = wp[node.id]
        fp = world_footprint(pose, node.extent)
        lines.append(
            f'<polygon class="object" id="fp-{node.id}" points="{pts(fp)}" '
            'fill="#9ec5fe" fill-opacity="0.6" stroke="#1d4ed8" stroke-width="1"/>'
        )
        # front tick: from the center toward local +y
        tick = 0.3 * min(node.extent.dx, node.extent.dy)
        fx = pose.x - math.sin(pose.yaw) * tick
        fy = pose.y + math.cos(pose.yaw) * tick
        (cx, cy) = to_page((pose.x, pose.y))
        (tx, ty) = to_page((fx, fy))
        lines.append(
            f'<line class="front" x1="{cx:.4f}" y1="{cy:.4f}" x2="{tx:.4f}" y2="{ty:.4f}" '
            'stroke="#1d4ed8" stroke-width="1.5"/>'
        )
        lines.append(
            f'<text class="label" x="{cx:.4f}" y="{cy:.4f}" font-size="12" '
            f'text-anchor="middle">{node.id}</text>'
        )
        for child in node.children:
            visit(child)

    for child in result.root.children:
        visit(child)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_svg(result: HierarchicalResult, domain: Domain, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg_text(result, domain))
