import math
import random

import pytest

from layoutforge import (
    AssembleConfig,
    AutoRules,
    Breakdown,
    Domain,
    Extent,
    Hard,
    ObjectNode,
    Pose,
    RelationKind,
    RelationTerm,
    Soft,
    assemble,
    evaluate,
    evaluate_term,
    is_feasible,
)
from layoutforge.problem import CrossLevelTermError, LayoutProblem
from layoutforge.relations import TermError


def room(w=10.0, h=3.0):
    return Domain(boundary=((0, 0), (w, 0), (w, w), (0, w)), height=h)


def node(id, dims, children=(), **kw):
    return ObjectNode(id=id, category="box", extent=Extent(*dims), children=tuple(children), **kw)


def scene(*children):
    return node("scene", (1, 1, 1), children)


class TestAssemble:
    def test_counts_user_and_auto_terms(self):
        tree = scene(node("a", (1, 1, 1)), node("b", (1, 1, 1)), node("c", (1, 1, 1)))
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 1.0}, Soft()),
            RelationTerm(RelationKind.PROXIMITY, ("b", "c"), {}, Hard()),
        ]
        p = assemble(tree, room(), terms)
        assert p.n == 3
        # 1 soft user term; 1 hard user + 3 collision pairs + 3 containment
        assert p.m == 1
        assert p.k == 1 + 3 + 3

    def test_interior_level_domain_is_parent_top(self):
        shelf = node("shelf", (0.8, 0.3, 1.8), (node("book", (0.1, 0.05, 0.2)),))
        p = assemble(shelf, room(), (), is_root=False)
        xs = sorted({round(v[0], 9) for v in p.domain.boundary})
        ys = sorted({round(v[1], 9) for v in p.domain.boundary})
        assert xs == [-0.4, 0.4]
        assert ys == [-0.15, 0.15]
        # ceiling = half the shelf height plus the default clearance
        assert p.domain.height == pytest.approx(0.9 + 0.5)
        assert p.movable_support_z["book"] == pytest.approx(0.9 + 0.1)

    def test_cross_level_term_rejected(self):
        tree = scene(node("a", (1, 1, 1)))
        bad = [RelationTerm(RelationKind.DISTANCE, ("a", "ghost"), {}, Soft())]
        with pytest.raises(CrossLevelTermError):
            assemble(tree, room(), bad)

    def test_auto_rules_disabled_per_pair(self):
        tree = scene(node("a", (1, 1, 1)), node("b", (1, 1, 1)))
        cfg = AssembleConfig(
            auto_rules=AutoRules(skip_collision_pairs=frozenset({frozenset(("a", "b"))}))
        )
        p = assemble(tree, room(), (), cfg)
        kinds = [t.kind for t in p.hard_terms]
        assert RelationKind.COLLISION not in kinds
        assert kinds.count(RelationKind.CONTAINMENT) == 2

    def test_fixed_objects_keep_poses_and_add_no_variables(self):
        tree = scene(
            node("a", (1, 1, 1)),
            node("marker", (0.1, 0.1, 0.1), fixed=True, local_pose=Pose(2, 2, 0.05)),
        )
        p = assemble(tree, room(), ())
        assert p.movable_ids == ("a",)
        assert p.fixed_poses["marker"].x == 2


class TestEvaluate:
    def _problem(self, terms=()):
        tree = scene(node("a", (1, 1, 1)), node("b", (1, 1, 1)), node("c", (1, 1, 1)))
        return assemble(tree, room(), terms)

    def _layout(self, rng):
        return {
            oid: Pose(rng.uniform(1, 9), rng.uniform(1, 9), 0.5, yaw=rng.uniform(0, 2 * math.pi))
            for oid in ("a", "b", "c")
        }

    def test_no_soft_terms_objective_zero(self):
        p = self._problem()
        layout = {"a": Pose(2, 2, 0.5), "b": Pose(5, 5, 0.5), "c": Pose(8, 8, 0.5)}
        b = evaluate(p, layout)
        assert b.objective == 0.0
        assert b.total_violation == 0.0

    def test_sum_of_two_soft_terms(self):
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 1.0}, Soft()),
            RelationTerm(RelationKind.DISTANCE, ("b", "c"), {"target": 2.0}, Soft()),
        ]
        p = self._problem(terms)
        layout = {"a": Pose(1, 1, 0.5), "b": Pose(4, 1, 0.5), "c": Pose(9, 1, 0.5)}
        b = evaluate(p, layout)
        # gaps: 2.0 and 4.0 -> (2-1)^2 + (4-2)^2 = 1 + 4
        assert b.objective == pytest.approx(5.0, abs=1e-12)

    def test_matches_term_by_term_recomputation(self):
        rng = random.Random(99)
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 0.5}, Soft(1.5)),
            RelationTerm(RelationKind.ALIGNMENT, ("a", "b", "c"), {"axis": "x"}, Soft(0.7)),
            RelationTerm(RelationKind.OVERLAP, ("a", "c"), {"axis": "y"}, Hard(threshold=0.2)),
        ]
        p = self._problem(terms)
        for _ in range(25):
            layout = self._layout(rng)
            b = evaluate(p, layout)
            # independent recomputation, term by term, fresh caches
            soft = [
                evaluate_term(t, layout, p.domain, p.extents, p.categories).score
                for t in p.soft_terms
            ]
            hard = [
                evaluate_term(t, layout, p.domain, p.extents, p.categories).violation
                for t in p.hard_terms
            ]
            assert b.objective == pytest.approx(math.fsum(soft), abs=1e-12)
            assert b.soft_scores == tuple(soft)
            assert b.violations == tuple(hard)
            assert b.objective == pytest.approx(math.fsum(b.soft_scores), abs=1e-9)

    def test_pure_repeated_calls_identical(self):
        p = self._problem(
            [RelationTerm(RelationKind.DISTANCE, ("a", "b"), {}, Soft())]
        )
        layout = {"a": Pose(2, 2, 0.5), "b": Pose(6, 6, 0.5), "c": Pose(8, 2, 0.5)}
        b1 = evaluate(p, layout)
        b2 = evaluate(p, layout)
        assert b1 == b2

    def test_weight_scaling_preserves_ranking(self):
        rng = random.Random(7)
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 1.0}, Soft(1.0)),
            RelationTerm(RelationKind.DISTANCE, ("b", "c"), {"target": 2.0}, Soft(2.0)),
        ]
        p = self._problem(terms)
        scaled_terms = [
            RelationTerm(t.kind, t.participants, t.params, Soft(t.mode.weight * 3.5))
            for t in terms
        ]
        ps = self._problem(scaled_terms)
        candidates = [self._layout(rng) for _ in range(100)]
        base = [evaluate(p, c).objective for c in candidates]
        scaled = [evaluate(ps, c).objective for c in candidates]
        for b, s in zip(base, scaled):
            assert s == pytest.approx(3.5 * b, rel=1e-12, abs=1e-12)
        assert sorted(range(100), key=lambda i: base[i]) == sorted(
            range(100), key=lambda i: scaled[i]
        )

    def test_removing_soft_term_never_increases_objective(self):
        rng = random.Random(21)
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 1.0}, Soft()),
            RelationTerm(RelationKind.PROXIMITY, ("b", "c"), {}, Soft(2.0)),
        ]
        full = self._problem(terms)
        reduced = self._problem(terms[:1])
        for _ in range(30):
            layout = self._layout(rng)
            assert evaluate(reduced, layout).objective <= evaluate(full, layout).objective + 1e-15

    def test_missing_object_rejected(self):
        p = self._problem()
        with pytest.raises(TermError):
            evaluate(p, {"a": Pose(1, 1, 0.5)})


class TestIsFeasible:
    def _bd(self, violations):
        return Breakdown(0.0, (), tuple(violations))

    def test_all_zero(self):
        assert is_feasible(self._bd([0.0, 0.0]))

    def test_violation_fails(self):
        assert not is_feasible(self._bd([0.25]))

    def test_tolerance_knob(self):
        assert is_feasible(self._bd([1e-8]))
        assert not is_feasible(self._bd([1e-5]))
        assert is_feasible(self._bd([1e-5]), tol=1e-4)


class TestLayoutProblemInvariants:
    def test_needs_movable(self):
        with pytest.raises(TermError):
            LayoutProblem(
                domain=room(),
                movable_ids=(),
                fixed_poses={},
                extents={},
                categories={},
                soft_terms=(),
                hard_terms=(),
            )

    def test_term_ids_must_be_declared(self):
        with pytest.raises(TermError):
            LayoutProblem(
                domain=room(),
                movable_ids=("a",),
                fixed_poses={},
                extents={"a": Extent(1, 1, 1)},
                categories={"a": "box"},
                soft_terms=(
                    RelationTerm(RelationKind.DISTANCE, ("a", "ghost"), {}, Soft()),
                ),
                hard_terms=(),
            )
