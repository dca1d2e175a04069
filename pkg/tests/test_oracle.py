import itertools
import math

import pytest

from layoutforge import (
    AnnealConfig,
    AssembleConfig,
    AutoRules,
    Domain,
    Extent,
    GridSpec,
    Hard,
    ObjectNode,
    Pose,
    RelationKind,
    RelationTerm,
    Soft,
    anneal,
    assemble,
    evaluate,
    mc_polygon_area,
    oracle_solve,
)
from layoutforge.grid import candidates_for, cell_centers
from layoutforge.oracle import OracleTooLargeError


def room(w=4.0, h=3.0):
    return Domain(boundary=((0, 0), (w, 0), (w, w), (0, w)), height=h)


def node(id, dims, children=(), **kw):
    return ObjectNode(id=id, category="box", extent=Extent(*dims), children=tuple(children), **kw)


def scene(*children):
    return node("scene", (1, 1, 1), children)


class TestGridCandidates:
    def test_cell_centers_inside(self):
        centers = cell_centers(room(4.0), 0.5)
        assert len(centers) == 64
        assert all(0 < x < 4 and 0 < y < 4 for x, y in centers)
        assert centers == sorted(centers)

    def test_footprint_filter(self):
        cands = candidates_for("a", Extent(1, 1, 1), 0.5, room(4.0), GridSpec(0.5))
        # a unit cube center must stay >= 0.5 from each wall
        assert all(0.5 <= x <= 3.5 and 0.5 <= y <= 3.5 for x, y, _ in cands.poses)
        assert len(cands.poses) == 36 * 4
        assert list(cands.poses) == sorted(cands.poses)

    def test_anisotropic_footprint_depends_on_yaw(self):
        cands = candidates_for("a", Extent(2, 0.5, 1), 0.5, room(4.0), GridSpec(0.5))
        by_yaw = {yaw: {(x, y) for x, y, y2 in cands.poses if y2 == yaw} for yaw in (0.0, math.pi / 2)}
        # at yaw 0 the long side runs along x, so x is more constrained
        assert all(1.0 <= x <= 3.0 and 0.25 <= y <= 3.75 for x, y in by_yaw[0.0])
        assert all(0.25 <= x <= 3.75 and 1.0 <= y <= 3.0 for x, y in by_yaw[math.pi / 2])


def marker_scene(marker_xy, marker_dims=(0.1, 0.1, 0.1)):
    marker = node(
        "marker", marker_dims, fixed=True,
        local_pose=Pose(marker_xy[0], marker_xy[1], marker_dims[2] / 2),
    )
    cfg = AssembleConfig(
        auto_rules=AutoRules(skip_collision_pairs=frozenset({frozenset(("cube", "marker"))}))
    )
    term = RelationTerm(
        RelationKind.DISTANCE, ("cube", "marker"), {"metric": "center", "target": 0.0}, Soft()
    )
    return assemble(scene(node("cube", (1, 1, 1)), marker), room(4.0), [term], cfg)


class TestOracleSolve:
    def test_single_object_snaps_to_marker_node(self):
        # marker placed exactly on a grid node
        p = marker_scene((2.25, 2.75))
        sol = oracle_solve(p, GridSpec(0.5))
        assert sol.layout["cube"].x == 2.25
        assert sol.layout["cube"].y == 2.75
        assert sol.feasible

    def test_proximity_pair_lands_adjacent(self):
        terms = [
            RelationTerm(RelationKind.PROXIMITY, ("a", "b"), {}, Hard()),
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 0.0}, Soft()),
        ]
        p = assemble(scene(node("a", (1, 1, 1)), node("b", (1, 1, 1))), room(4.0), terms)
        sol = oracle_solve(p, GridSpec(0.5))
        assert sol.feasible
        a, b = sol.layout["a"], sol.layout["b"]
        # unit cubes on a 0.5 m lattice touch exactly at center distance 1.0
        assert math.hypot(a.x - b.x, a.y - b.y) == pytest.approx(1.0, abs=1e-12)
        assert sol.breakdown.objective == pytest.approx(0.0, abs=1e-12)

    def test_objective_equals_fresh_evaluate(self):
        terms = [RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 1.3}, Soft(1.7))]
        p = assemble(scene(node("a", (1, 1, 1)), node("b", (0.8, 0.6, 0.9))), room(4.0), terms)
        sol = oracle_solve(p, GridSpec(0.5))
        again = evaluate(p, sol.layout)
        assert sol.breakdown.objective == again.objective
        assert sol.breakdown.total_violation == again.total_violation

    def test_matches_exhaustive_reference(self):
        # small instance checked against a direct brute-force loop
        terms = [
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 0.6}, Soft()),
            RelationTerm(RelationKind.OVERLAP, ("a", "b"), {"axis": "x"}, Hard(threshold=0.4)),
        ]
        p = assemble(
            scene(node("a", (0.8, 0.5, 0.7)), node("b", (0.6, 0.6, 0.5))), room(2.5), terms
        )
        grid = GridSpec(0.5)
        sol = oracle_solve(p, grid)

        cands = {
            oid: candidates_for(oid, p.extents[oid], p.movable_support_z[oid], p.domain, grid)
            for oid in p.movable_ids
        }
        best = None
        for pa, pb in itertools.product(cands["a"].poses, cands["b"].poses):
            layout = {
                "a": Pose(pa[0], pa[1], cands["a"].z, yaw=pa[2]),
                "b": Pose(pb[0], pb[1], cands["b"].z, yaw=pb[2]),
            }
            bd = evaluate(p, layout)
            key = (
                (0, bd.objective) if bd.total_violation <= 1e-6 else (1, bd.total_violation, bd.objective)
            )
            if best is None or key < best:
                best = key
        assert best[0] == 0
        assert sol.feasible
        assert sol.breakdown.objective == pytest.approx(best[1], abs=1e-12)

    def test_tie_break_lexicographic(self):
        # marker centered in the room: a ring of equally good touching cells
        p = marker_scene((2.0, 2.0), marker_dims=(1.0, 1.0, 1.0))
        # gap metric to a unit marker cube: every touching pose scores 0
        term = RelationTerm(RelationKind.DISTANCE, ("cube", "marker"), {"target": 0.0}, Soft())
        p_g = assemble(
            scene(node("cube", (1, 1, 1)), node(
                "marker", (1, 1, 1), fixed=True, local_pose=Pose(2, 2, 0.5))),
            room(4.0),
            [term],
        )
        grid = GridSpec(0.5)
        sol = oracle_solve(p_g, grid)

        cands = candidates_for("cube", Extent(1, 1, 1), 0.5, p_g.domain, grid)
        optima = []
        for x, y, yaw in cands.poses:
            layout = {"cube": Pose(x, y, 0.5, yaw=yaw), "marker": Pose(2, 2, 0.5)}
            bd = evaluate(p_g, layout)
            if bd.total_violation <= 1e-6 and bd.objective == sol.breakdown.objective:
                optima.append((x, y, yaw))
        got = (sol.layout["cube"].x, sol.layout["cube"].y, sol.layout["cube"].yaw)
        assert got == min(optima)

    def test_object_order_invariance(self):
        terms = [RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 0.8}, Soft())]
        tree_ab = scene(node("a", (0.8, 0.6, 0.5)), node("b", (0.5, 0.5, 0.5)))
        tree_ba = scene(node("b", (0.5, 0.5, 0.5)), node("a", (0.8, 0.6, 0.5)))
        p1 = assemble(tree_ab, room(3.0), terms)
        p2 = assemble(tree_ba, room(3.0), terms)
        s1 = oracle_solve(p1, GridSpec(0.5))
        s2 = oracle_solve(p2, GridSpec(0.5))
        assert s1.breakdown.objective == pytest.approx(s2.breakdown.objective, abs=1e-12)

    def test_infeasible_instance_minimizes_violation(self):
        # two 2 m cubes cannot coexist in a 2.5 m room
        p = assemble(scene(node("a", (2, 2, 1)), node("b", (2, 2, 1))), room(2.5), ())
        sol = oracle_solve(p, GridSpec(0.5))
        assert not sol.feasible
        assert sol.breakdown.total_violation > 0

    def test_too_many_objects_rejected(self):
        p = assemble(
            scene(*[node(f"o{i}", (0.5, 0.5, 0.5)) for i in range(4)]), room(4.0), ()
        )
        with pytest.raises(OracleTooLargeError):
            oracle_solve(p, GridSpec(0.5))

    def test_combination_bound_rejected(self):
        p = assemble(
            scene(*[node(f"o{i}", (0.2, 0.2, 0.2)) for i in range(3)]), room(4.0), ()
        )
        with pytest.raises(OracleTooLargeError):
            oracle_solve(p, GridSpec(0.01))

    def test_snap_anneal_never_beats_oracle(self):
        terms = [RelationTerm(RelationKind.DISTANCE, ("a", "b"), {"target": 0.9}, Soft())]
        p = assemble(scene(node("a", (1, 1, 1)), node("b", (1, 1, 1))), room(4.0), terms)
        grid = GridSpec(0.5)
        opt = oracle_solve(p, grid)
        for seed in range(3):
            sol = anneal(p, AnnealConfig(seed=seed, restarts=2, max_evals=4_000, snap=grid))
            if sol.feasible:
                assert sol.breakdown.objective >= opt.breakdown.objective - 1e-9


class TestMcPolygonArea:
    UNIT = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))

    def test_coincident_squares(self):
        est, se = mc_polygon_area(self.UNIT, self.UNIT, samples=100_000, seed=1)
        assert est == pytest.approx(1.0, abs=3 * se + 1e-12)
        assert se < 0.01

    def test_disjoint_squares(self):
        far = tuple((x + 5, y) for x, y in self.UNIT)
        est, _ = mc_polygon_area(self.UNIT, far, samples=50_000, seed=2)
        assert est == 0.0

    def test_offset_quarter_overlap(self):
        shifted = tuple((x + 0.5, y + 0.5) for x, y in self.UNIT)
        est, se = mc_polygon_area(self.UNIT, shifted, samples=100_000, seed=3)
        assert abs(est - 0.25) <= 3 * se

    def test_deterministic(self):
        a = mc_polygon_area(self.UNIT, self.UNIT, samples=10_000, seed=7)
        b = mc_polygon_area(self.UNIT, self.UNIT, samples=10_000, seed=7)
        assert a == b
