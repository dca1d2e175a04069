"""Subproblem assembly and objective evaluation.

A LayoutProblem gathers one hierarchy level: its domain, the movable and
fixed objects, the user terms at that level, and the auto-injected
collision/containment rules.  The objective is the weighted sum of soft
term scores; hard terms accumulate into a total violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .relations import (
    Comparator,
    EvalCache,
    Hard,
    RelationKind,
    RelationTerm,
    TermError,
    evaluate_term,
)
from .scene import Domain, Extent, Layout, ObjectNode, Pose, support_z

DEFAULT_FEASIBILITY_TOL = 1e-6


class CrossLevelTermError(TermError):
    """A user term references ids outside the assembled hierarchy level."""


@dataclass(frozen=True)
class AutoRules:
    """Injected physicality constraints, disableable per pair / per object."""

    collision: bool = True
    containment: bool = True
    skip_collision_pairs: frozenset[frozenset[str]] = frozenset()
    skip_containment_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AssembleConfig:
    auto_rules: AutoRules = AutoRules()
    # vertical clearance assumed above interior support surfaces, meters
    level_clearance: float = 0.5


@dataclass(frozen=True)
class LayoutProblem:
    domain: Domain
    movable_ids: tuple[str, ...]
    fixed_poses: Mapping[str, Pose]
    extents: Mapping[str, Extent]
    categories: Mapping[str, str]
    soft_terms: tuple[RelationTerm, ...]
    hard_terms: tuple[RelationTerm, ...]
    # support height per movable object (z is not an optimization variable
    # unless full_6dof is enabled)
    movable_support_z: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.movable_ids:
            raise TermError("a layout problem needs at least one movable object")
        ids = set(self.movable_ids) | set(self.fixed_poses)
        if len(ids) != len(self.movable_ids) + len(self.fixed_poses):
            raise TermError("movable and fixed id sets must be disjoint")
        for term in self.soft_terms + self.hard_terms:
            for pid in term.participants:
                if pid not in ids:
                    raise TermError(f"term references undeclared id {pid!r}")
        if not self.movable_support_z:
            object.__setattr__(
                self,
                "movable_support_z",
                {oid: 0.5 * self.extents[oid].dz for oid in self.movable_ids},
            )

    @property
    def all_ids(self) -> tuple[str, ...]:
        return self.movable_ids + tuple(self.fixed_poses)

    @property
    def n(self) -> int:
        return len(self.movable_ids)

    @property
    def m(self) -> int:
        return len(self.soft_terms)

    @property
    def k(self) -> int:
        return len(self.hard_terms)

    @property
    def soft_weight_sum(self) -> float:
        return sum(t.mode.weight for t in self.soft_terms)  # type: ignore[union-attr]


@dataclass(frozen=True)
class Breakdown:
    objective: float
    soft_scores: tuple[float, ...]
    violations: tuple[float, ...]

    @property
    def total_violation(self) -> float:
        return math.fsum(self.violations)


def assemble(
    node: ObjectNode,
    domain: Domain,
    user_terms: Sequence[RelationTerm] = (),
    config: AssembleConfig = AssembleConfig(),
    *,
    is_root: bool = True,
) -> LayoutProblem:
    """Build the subproblem for one hierarchy level (the node's children).

    The root level is solved in the domain frame over the room polygon;
    an interior level is solved in its parent's local frame over the
    parent's top-face rectangle (with the configured clearance as height).
    Collision and containment rules are injected unless disabled.
    """
    children = node.children
    level_ids = {c.id for c in children}
    for term in user_terms:
        for pid in term.participants:
            if pid not in level_ids:
                raise CrossLevelTermError(
                    f"cross-level term: {pid!r} is not a child of {node.id!r}"
                )

    if is_root:
        level_domain = domain
    else:
        hx = 0.5 * node.extent.dx
        hy = 0.5 * node.extent.dy
        # local z is measured from the parent's box center, so the ceiling
        # sits clearance above the top face at +dz/2
        level_domain = Domain(
            boundary=((hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)),
            height=0.5 * node.extent.dz + config.level_clearance,
        )

    movable = tuple(c.id for c in children if not c.fixed)
    fixed = {c.id: c.local_pose for c in children if c.fixed}
    extents = {c.id: c.extent for c in children}
    categories = {c.id: c.category for c in children}

    soft = [t for t in user_terms if t.is_soft]
    hard = [t for t in user_terms if not t.is_soft]

    rules = config.auto_rules
    if rules.collision:
        ordered = [c.id for c in children]
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                pair = frozenset((ordered[i], ordered[j]))
                if pair in rules.skip_collision_pairs:
                    continue
                hard.append(
                    RelationTerm(
                        RelationKind.COLLISION,
                        (ordered[i], ordered[j]),
                        {},
                        Hard(Comparator.LESS_EQ, 0.0),
                    )
                )
    if rules.containment:
        for c in children:
            if c.id in rules.skip_containment_ids:
                continue
            hard.append(
                RelationTerm(
                    RelationKind.CONTAINMENT,
                    (c.id,),
                    {},
                    Hard(Comparator.LESS_EQ, 0.0),
                )
            )

    parent_extent = None if is_root else node.extent
    return LayoutProblem(
        domain=level_domain,
        movable_ids=movable,
        fixed_poses=fixed,
        extents=extents,
        categories=categories,
        soft_terms=tuple(soft),
        hard_terms=tuple(hard),
        movable_support_z={
            c.id: support_z(parent_extent, c.extent) for c in children if not c.fixed
        },
    )


def evaluate(problem: LayoutProblem, layout: Layout, cache: EvalCache | None = None) -> Breakdown:
    """Deterministic full evaluation of a layout."""
    for oid in problem.all_ids:
        if oid not in layout:
            raise TermError(f"layout missing object {oid!r}")
    if cache is None:
        cache = EvalCache(layout, problem.extents)
    soft_scores = tuple(
        evaluate_term(t, layout, problem.domain, problem.extents, problem.categories, cache).score
        for t in problem.soft_terms
    )
    violations = tuple(
        evaluate_term(t, layout, problem.domain, problem.extents, problem.categories, cache).violation
        for t in problem.hard_terms
    )
    return Breakdown(math.fsum(soft_scores), soft_scores, violations)  # type: ignore[arg-type]


def is_feasible(breakdown: Breakdown, tol: float = DEFAULT_FEASIBILITY_TOL) -> bool:
    return breakdown.total_violation <= tol
