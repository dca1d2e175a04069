"""Scene-spec documents: schema, parsing, and normalization.

The on-disk format is JSON with an explicit version field.  Documents are
validated strictly (unknown fields rejected, references resolved) and
normalized so that parse -> serialize -> parse is the identity.  The same
pydantic models double as the request schemas of the HTTP service.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .problem import AssembleConfig, AutoRules
from .relations import Comparator, Hard, RelationKind, RelationTerm, Soft, TermError
from .scene import Domain, Extent, ObjectNode, Pose, SceneError, validate_tree
from .solver import AnnealConfig, MoveProbs
from .trajectory import (
    Anchor,
    AnchorRelation,
    Subject,
    Template,
    TrajectoryCommand,
    TrajectoryError,
)

SCENE_ROOT_ID = "<scene>"


class SpecError(ValueError):
    """Malformed or inconsistent scene-spec document."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainDoc(_Model):
    boundary: list[tuple[float, float]] = Field(min_length=3)
    height: float = Field(gt=0)


class PoseDoc(_Model):
    x: float
    y: float
    yaw: float = 0.0


class ObjectDoc(_Model):
    id: str = Field(min_length=1)
    category: str = "object"
    dims: tuple[float, float, float]
    parent: str | None = None
    fixed: bool = False
    pose: PoseDoc | None = None  # required iff fixed; z comes from the support rule

    @model_validator(mode="after")
    def _check(self):
        if any(not (d > 0 and math.isfinite(d)) for d in self.dims):
            raise ValueError(f"object {self.id!r}: dims must be positive")
        if self.fixed and self.pose is None:
            raise ValueError(f"object {self.id!r}: fixed objects need a pose")
        if not self.fixed and self.pose is not None:
            raise ValueError(f"object {self.id!r}: only fixed objects carry a pose")
        return self


class SoftDoc(_Model):
    weight: float = 1.0


class HardDoc(_Model):
    comparator: Literal["less_eq", "greater_eq", "within_tol"] = "less_eq"
    threshold: float | None = None  # None = kind default (eps_prox for proximity)
    tolerance: float = 0.0


_TERM_PARAM_KEYS = {
    "distance": {"target", "metric"},
    "relative_orientation": {"target"},
    "alignment": {"axis"},
    "proximity": set(),
    "overlap": {"axis", "target"},
    "symmetry": {"point", "normal", "center", "order", "pairs"},
    "containment": set(),
    "collision": set(),
}


class TermDoc(_Model):
    kind: Literal[
        "distance",
        "relative_orientation",
        "alignment",
        "proximity",
        "overlap",
        "symmetry",
        "containment",
        "collision",
    ]
    participants: list[str] = Field(min_length=1)
    params: dict[str, object] = Field(default_factory=dict)
    soft: SoftDoc | None = None
    hard: HardDoc | None = None

    @model_validator(mode="after")
    def _check(self):
        if (self.soft is None) == (self.hard is None):
            raise ValueError("term needs exactly one of 'soft' or 'hard'")
        unknown = set(self.params) - _TERM_PARAM_KEYS[self.kind]
        if unknown:
            raise ValueError(f"unknown params for {self.kind}: {sorted(unknown)}")
        return self


class MoveProbsDoc(_Model):
    translate: float = 0.5
    rotate_jitter: float = 0.2
    rotate_snap: float = 0.1
    swap: float = 0.2


class SolverDoc(_Model):
    # None means "derive automatically" where the solver supports it
    t0: float | None = None
    alpha: float = 0.95
    iters_per_temp: int | None = None
    t_min_ratio: float = 1e-4
    max_evals: int = 200_000
    move_probs: MoveProbsDoc = MoveProbsDoc()
    sigma_xy: float | None = None
    sigma_yaw: float = 0.25
    penalty_w0: float = 1e3
    restarts: int = 3
    full_6dof: bool = False
    level_clearance: float = 0.5


class AutoRulesDoc(_Model):
    collision: bool = True
    containment: bool = True
    disable_collision_pairs: list[tuple[str, str]] = Field(default_factory=list)
    disable_containment: list[str] = Field(default_factory=list)


class AnchorDoc(_Model):
    object: str
    relation: Literal[
        "in_front_of", "behind", "left_of", "right_of", "above", "centered_on", "around"
    ]
    distance: float | None = None  # None = auto


class TrajectoryDoc(_Model):
    template: Literal["pan", "orbit", "dolly", "crane", "static"]
    frames: int
    anchor: AnchorDoc
    subject: str = "camera"  # "camera" or "object:<id>"
    span: float | None = None
    arc: float | None = None
    radius: float | None = None
    travel: float | None = None
    rise: float | None = None
    yaw_hold: bool = False


class SceneSpecDoc(_Model):
    version: Literal[1]
    domain: DomainDoc
    objects: list[ObjectDoc] = Field(min_length=1)
    terms: list[TermDoc] = Field(default_factory=list)
    solver: SolverDoc = SolverDoc()
    auto_rules: AutoRulesDoc = AutoRulesDoc()
    trajectories: list[TrajectoryDoc] = Field(default_factory=list)


@dataclass
class ParsedScene:
    doc: SceneSpecDoc  # normalized (defaults applied)
    domain: Domain
    root: ObjectNode  # synthetic scene root, support heights applied
    terms_by_level: dict[str | None, list[RelationTerm]]
    solver_config: AnnealConfig
    assemble_config: AssembleConfig
    commands: list[TrajectoryCommand] = dc_field(default_factory=list)

    def object_ids(self) -> list[str]:
        return [n.id for c in self.root.children for n in c.walk()]


def parse_spec(data: bytes | str) -> ParsedScene:
    """Validate a scene-spec document and build the in-memory model.

    Syntax errors carry line/column positions; schema and reference errors
    carry field paths or term indices.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise SpecError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        doc = SceneSpecDoc.model_validate(raw)
    except ValidationError as e:
        lines = []
        for err in e.errors():
            path = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{path}: {err['msg']}")
        raise SpecError("; ".join(lines)) from e
    return build_scene(doc)


def build_scene(doc: SceneSpecDoc) -> ParsedScene:
    """Turn a validated document into domain, tree, terms, and configs."""
    try:
        domain = Domain(boundary=tuple(map(tuple, doc.domain.boundary)), height=doc.domain.height)
    except SceneError as e:
        raise SpecError(f"domain: {e}") from e

    by_id: dict[str, ObjectDoc] = {}
    for o in doc.objects:
        if o.id in by_id:
            raise SpecError(f"duplicate object id {o.id!r}")
        if o.id == SCENE_ROOT_ID:
            raise SpecError(f"object id {SCENE_ROOT_ID!r} is reserved")
        by_id[o.id] = o
    for o in doc.objects:
        if o.parent is not None and o.parent not in by_id:
            raise SpecError(f"object {o.id!r}: dangling parent {o.parent!r}")

    children_of: dict[str | None, list[ObjectDoc]] = {}
    for o in doc.objects:
        children_of.setdefault(o.parent, []).append(o)

    def build_node(o: ObjectDoc) -> ObjectNode:
        pose = Pose(o.pose.x, o.pose.y, 0.0, yaw=o.pose.yaw) if o.pose else Pose()
        return ObjectNode(
            id=o.id,
            category=o.category,
            extent=Extent(*o.dims),
            local_pose=pose,
            fixed=o.fixed,
            children=tuple(build_node(c) for c in children_of.get(o.id, [])),
        )

    # cycle check: every object must reach a root (parent None)
    for o in doc.objects:
        seen = set()
        cur = o
        while cur.parent is not None:
            if cur.parent in seen or cur.parent == o.id:
                raise SpecError(f"object {o.id!r}: parent cycle")
            seen.add(cur.parent)
            cur = by_id[cur.parent]

    root = ObjectNode(
        id=SCENE_ROOT_ID,
        category="scene",
        extent=Extent(1.0, 1.0, 1.0),
        fixed=True,
        children=tuple(build_node(o) for o in children_of.get(None, [])),
    )
    report = validate_tree(root, domain)
    if not report.ok:
        msgs = "; ".join(f"{d.node_id}: {d.message}" for d in report.diagnostics)
        raise SpecError(f"invalid scene tree: {msgs}")
    root = report.root

    parent_of = {o.id: o.parent for o in doc.objects}
    terms_by_level: dict[str | None, list[RelationTerm]] = {}
    for i, t in enumerate(doc.terms):
        for pid in t.participants:
            if pid not in by_id:
                raise SpecError(f"terms.{i}: dangling id {pid!r}")
        levels = {parent_of[pid] for pid in t.participants}
        if len(levels) != 1:
            raise SpecError(
                f"terms.{i}: participants span levels {sorted(str(l) for l in levels)}"
            )
        try:
            term = RelationTerm(
                kind=RelationKind(t.kind),
                participants=tuple(t.participants),
                params=_convert_params(t),
                mode=_convert_mode(t),
            )
        except TermError as e:
            raise SpecError(f"terms.{i}: {e}") from e
        terms_by_level.setdefault(levels.pop(), []).append(term)

    s = doc.solver
    solver_config = AnnealConfig(
        t0=s.t0,
        alpha=s.alpha,
        iters_per_temp=s.iters_per_temp,
        t_min_ratio=s.t_min_ratio,
        max_evals=s.max_evals,
        move_probs=MoveProbs(
            s.move_probs.translate,
            s.move_probs.rotate_jitter,
            s.move_probs.rotate_snap,
            s.move_probs.swap,
        ),
        sigma_xy=s.sigma_xy,
        sigma_yaw=s.sigma_yaw,
        penalty_w0=s.penalty_w0,
        restarts=s.restarts,
        full_6dof=s.full_6dof,
    )
    r = doc.auto_rules
    for a, b in r.disable_collision_pairs:
        for pid in (a, b):
            if pid not in by_id:
                raise SpecError(f"auto_rules.disable_collision_pairs: unknown id {pid!r}")
    for pid in r.disable_containment:
        if pid not in by_id:
            raise SpecError(f"auto_rules.disable_containment: unknown id {pid!r}")
    assemble_config = AssembleConfig(
        auto_rules=AutoRules(
            collision=r.collision,
            containment=r.containment,
            skip_collision_pairs=frozenset(frozenset(p) for p in r.disable_collision_pairs),
            skip_containment_ids=frozenset(r.disable_containment),
        ),
        level_clearance=s.level_clearance,
    )

    commands = []
    for i, td in enumerate(doc.trajectories):
        if td.anchor.object not in by_id:
            raise SpecError(f"trajectories.{i}: unknown anchor object {td.anchor.object!r}")
        if td.subject == "camera":
            subject = Subject.camera()
        elif td.subject.startswith("object:"):
            oid = td.subject.split(":", 1)[1]
            if oid not in by_id:
                raise SpecError(f"trajectories.{i}: unknown subject object {oid!r}")
            subject = Subject.object(oid)
        else:
            raise SpecError(f"trajectories.{i}: subject must be 'camera' or 'object:<id>'")
        try:
            commands.append(
                TrajectoryCommand(
                    template=Template(td.template),
                    frames=td.frames,
                    anchor=Anchor(td.anchor.object, AnchorRelation(td.anchor.relation), td.anchor.distance),
                    subject=subject,
                    span=td.span,
                    arc=td.arc,
                    radius=td.radius,
                    travel=td.travel,
                    rise=td.rise,
                    yaw_hold=td.yaw_hold,
                )
            )
        except TrajectoryError as e:
            raise SpecError(f"trajectories.{i}: {e}") from e

    return ParsedScene(
        doc=doc,
        domain=domain,
        root=root,
        terms_by_level=terms_by_level,
        solver_config=solver_config,
        assemble_config=assemble_config,
        commands=commands,
    )


def _convert_params(t: TermDoc) -> dict[str, object]:
    params = dict(t.params)
    if t.kind in ("distance", "relative_orientation", "overlap") and "target" in params:
        params["target"] = float(params["target"])  # type: ignore[arg-type]
    if "pairs" in params and params["pairs"] is not None:
        params["pairs"] = [tuple(p) for p in params["pairs"]]  # type: ignore[union-attr]
    return params


def _convert_mode(t: TermDoc) -> Soft | Hard:
    if t.soft is not None:
        return Soft(weight=t.soft.weight)
    assert t.hard is not None
    return Hard(
        comparator=Comparator(t.hard.comparator),
        threshold=t.hard.threshold,
        tolerance=t.hard.tolerance,
    )


def serialize_spec(doc: SceneSpecDoc) -> str:
    """Canonical JSON form of a (normalized) document; stable byte-for-byte."""
    return json.dumps(doc.model_dump(mode="json"), indent=2) + "\n"
