import math
import random

import pytest

from layoutforge import (
    Comparator,
    Domain,
    Extent,
    Hard,
    Pose,
    RelationKind,
    RelationTerm,
    Soft,
    TiltedObjectError,
    evaluate_term,
    measure_alignment,
    measure_collision,
    measure_containment,
    measure_distance,
    measure_overlap,
    measure_proximity,
    measure_rel_orientation,
    measure_symmetry,
)
from layoutforge.relations import Reflection, Rotational, TermError, UnknownObjectError, UnpairableSetError

from oracles import (
    axis_projection_interval,
    sampled_box_gap,
    shapely_containment,
    shapely_gap,
    shapely_intersection_area,
)

TAU = 2 * math.pi


def cube(x, y, z=0.5, yaw=0.0, side=1.0):
    return (Pose(x, y, z, yaw=yaw), Extent(side, side, side))


def random_upright_box(rng, span=6.0):
    pose = Pose(
        rng.uniform(-span, span),
        rng.uniform(-span, span),
        rng.uniform(0.2, 2.0),
        yaw=rng.uniform(0, TAU),
    )
    ext = Extent(rng.uniform(0.2, 2.5), rng.uniform(0.2, 2.5), rng.uniform(0.2, 2.0))
    return pose, ext


class TestDistance:
    def test_separated_cubes(self):
        assert measure_distance(cube(0, 0), cube(3, 0)) == pytest.approx(2.0, abs=1e-12)

    def test_overlapping_cubes_zero(self):
        assert measure_distance(cube(0, 0), cube(0.5, 0)) == 0.0

    def test_rotated_pair_against_sampling_oracle(self):
        a = cube(0, 0)
        b = cube(2, 2, yaw=math.pi / 4)
        got = measure_distance(a, b)
        expect = sampled_box_gap(*a, *b)
        assert got == pytest.approx(expect, abs=1e-2)

    def test_vertical_gap_combines(self):
        # boxes with both planar separation (3.0) and vertical gap (1.5)
        a = (Pose(0, 0, 0.5), Extent(1, 1, 1))
        b = (Pose(4, 0, 3.0), Extent(1, 1, 1))
        got = measure_distance(a, b)
        assert got == pytest.approx(math.hypot(3.0, 1.5), abs=1e-12)

    def test_tilted_rejected(self):
        with pytest.raises(TiltedObjectError):
            measure_distance((Pose(0, 0, 0, roll=0.3), Extent(1, 1, 1)), cube(3, 0))

    def test_random_pairs_against_shapely(self):
        rng = random.Random(7)
        for _ in range(200):
            a = random_upright_box(rng)
            b = random_upright_box(rng)
            assert measure_distance(a, b) == pytest.approx(shapely_gap(*a, *b), abs=1e-9)


class TestRelOrientation:
    def test_plain_difference(self):
        assert measure_rel_orientation(Pose(yaw=0.3), Pose(yaw=0.1)) == pytest.approx(0.2, abs=1e-12)

    def test_wraps_across_zero(self):
        got = measure_rel_orientation(Pose(yaw=0.1), Pose(yaw=TAU - 0.1))
        assert got == pytest.approx(0.2, abs=1e-12)

    def test_facing_target_satisfied(self):
        assert measure_rel_orientation(Pose(yaw=0), Pose(yaw=math.pi), math.pi) == pytest.approx(0.0, abs=1e-12)

    def test_range(self):
        rng = random.Random(3)
        for _ in range(100):
            m = measure_rel_orientation(
                Pose(yaw=rng.uniform(0, TAU)), Pose(yaw=rng.uniform(0, TAU)), rng.uniform(0, TAU)
            )
            assert 0.0 <= m <= math.pi + 1e-12


class TestAlignment:
    @pytest.mark.parametrize(
        "ys,expect", [((1.0, 1.0, 1.0), 0.0), ((0.0, 1.0, 2.0), 2.0), ((0.0, 0.0, 3.0), 6.0)]
    )
    def test_spread_examples(self, ys, expect):
        centers = [(float(i), y) for i, y in enumerate(ys)]
        assert measure_alignment(centers, "x") == pytest.approx(expect, abs=1e-12)

    def test_axis_y_uses_x_spread(self):
        centers = [(0.0, 0.0), (2.0, 5.0)]
        assert measure_alignment(centers, "y") == pytest.approx(2.0, abs=1e-12)

    def test_zero_iff_equal(self):
        assert measure_alignment([(0, 2.5), (1, 2.5)], "x") == 0.0
        assert measure_alignment([(0, 2.5), (1, 2.5000001)], "x") > 0.0


class TestProximity:
    def test_touching_is_zero(self):
        assert measure_proximity(cube(0, 0), cube(1, 0)) == 0.0

    def test_hard_default_threshold(self):
        layout = {"a": Pose(0, 0, 0.5), "b": Pose(1.005, 0, 0.5)}
        extents = {"a": Extent(1, 1, 1), "b": Extent(1, 1, 1)}
        term = RelationTerm(RelationKind.PROXIMITY, ("a", "b"), {}, Hard())
        res = evaluate_term(term, layout, _room(), extents)
        assert res.measure == pytest.approx(0.005, abs=1e-12)
        assert res.violation == 0.0

    def test_hard_violated_by_wide_gap(self):
        layout = {"a": Pose(0, 0, 0.5), "b": Pose(1.5, 0, 0.5)}
        extents = {"a": Extent(1, 1, 1), "b": Extent(1, 1, 1)}
        term = RelationTerm(RelationKind.PROXIMITY, ("a", "b"), {}, Hard())
        res = evaluate_term(term, layout, _room(), extents)
        assert res.violation == pytest.approx(0.49, abs=1e-12)


class TestOverlap:
    def test_plain_intervals(self):
        a = (Pose(1, 0, 0.5), Extent(2, 1, 1))   # x in [0, 2]
        b = (Pose(2, 0, 0.5), Extent(2, 1, 1))   # x in [1, 3]
        assert measure_overlap(a, b, "x") == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        a = (Pose(0.5, 0, 0.5), Extent(1, 1, 1))
        b = (Pose(2.5, 0, 0.5), Extent(1, 1, 1))
        assert measure_overlap(a, b, "x") == 0.0

    def test_rotated_projection_oracle(self):
        a = (Pose(0, 0, 0.5, yaw=math.pi / 4), Extent(1, 1, 1))
        b = (Pose(1, 0, 0.5), Extent(1, 1, 1))
        got = measure_overlap(a, b, "x")
        assert got == pytest.approx(math.sqrt(2) / 2 + 0.5 - 1.0, abs=1e-12)

    def test_tilted_boxes_supported(self):
        rng = random.Random(11)
        for _ in range(50):
            pa = Pose(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2),
                      yaw=rng.uniform(0, TAU), pitch=rng.uniform(0, TAU), roll=rng.uniform(0, TAU))
            pb = Pose(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2), yaw=rng.uniform(0, TAU))
            ea, eb = Extent(1.2, 0.7, 0.4), Extent(0.8, 0.8, 1.1)
            for axis, idx in (("x", 0), ("y", 1), ("z", 2)):
                lo_a, hi_a = axis_projection_interval(pa, ea, idx)
                lo_b, hi_b = axis_projection_interval(pb, eb, idx)
                expect = max(0.0, min(hi_a, hi_b) - max(lo_a, lo_b))
                assert measure_overlap((pa, ea), (pb, eb), axis) == pytest.approx(expect, abs=1e-9)

    def test_overlap_bounded_by_projections(self):
        rng = random.Random(5)
        for _ in range(100):
            a = random_upright_box(rng)
            b = random_upright_box(rng)
            for axis, idx in (("x", 0), ("y", 1), ("z", 2)):
                m = measure_overlap(a, b, axis)
                la = axis_projection_interval(a[0], a[1], idx)
                lb = axis_projection_interval(b[0], b[1], idx)
                assert m <= min(la[1] - la[0], lb[1] - lb[0]) + 1e-12


class TestSymmetry:
    def test_mirrored_chairs(self):
        items = [("a", "chair", (1.0, 0.0, 0.5)), ("b", "chair", (-1.0, 0.0, 0.5))]
        spec = Reflection((0.0, 0.0), (1.0, 0.0))
        assert measure_symmetry(items, spec) == pytest.approx(0.0, abs=1e-12)

    def test_off_mirror_residual(self):
        items = [("a", "chair", (1.0, 0.0, 0.5)), ("b", "chair", (-1.1, 0.0, 0.5))]
        spec = Reflection((0.0, 0.0), (1.0, 0.0))
        assert measure_symmetry(items, spec) == pytest.approx(0.1, abs=1e-12)

    def test_rotational_compass_points(self):
        items = [
            ("n", "stool", (0.0, 2.0, 0.3)),
            ("e", "stool", (2.0, 0.0, 0.3)),
            ("s", "stool", (0.0, -2.0, 0.3)),
            ("w", "stool", (-2.0, 0.0, 0.3)),
        ]
        assert measure_symmetry(items, Rotational((0.0, 0.0), 4)) == pytest.approx(0.0, abs=1e-12)

    def test_category_mismatch_unpairable(self):
        items = [("a", "chair", (1.0, 0.0, 0.5)), ("b", "table", (-1.0, 0.0, 0.5))]
        with pytest.raises(UnpairableSetError):
            measure_symmetry(items, Reflection((0.0, 0.0), (1.0, 0.0)))

    def test_odd_count_unpairable(self):
        items = [
            ("a", "chair", (1.0, 0.0, 0.5)),
            ("b", "chair", (-1.0, 0.0, 0.5)),
            ("c", "chair", (0.0, 3.0, 0.5)),
        ]
        with pytest.raises(UnpairableSetError):
            measure_symmetry(items, Reflection((0.0, 0.0), (1.0, 0.0)))

    def test_reflecting_configuration_preserves_measure(self):
        rng = random.Random(23)
        for _ in range(50):
            items = [
                (f"o{i}", "chair", (rng.uniform(-4, 4), rng.uniform(-4, 4), 0.4))
                for i in range(4)
            ]
            q = (rng.uniform(-2, 2), rng.uniform(-2, 2))
            ang = rng.uniform(0, TAU)
            n = (math.cos(ang), math.sin(ang))
            base = measure_symmetry(items, Reflection(q, n))
            # mirror everything (objects and plane) across x = 0
            mirrored = [(i, c, (-p[0], p[1], p[2])) for i, c, p in items]
            spec_m = Reflection((-q[0], q[1]), (-n[0], n[1]))
            assert measure_symmetry(mirrored, spec_m) == pytest.approx(base, abs=1e-9)


def _room(w=10.0, h=3.0, cx=0.0, cy=0.0):
    half = w / 2
    return Domain(
        boundary=(
            (cx - half, cy - half),
            (cx + half, cy - half),
            (cx + half, cy + half),
            (cx - half, cy + half),
        ),
        height=h,
    )


class TestContainment:
    def test_inside_room(self):
        assert measure_containment(cube(0, 0), _room()) == 0.0

    def test_corner_excursions_match_geometric_oracle(self):
        room = _room()
        # push a cube straight through the east wall: two corners out 0.3 each
        box = cube(5.0 - 0.5 + 0.3, 0.0)
        got = measure_containment(box, room)
        assert got == pytest.approx(0.6, abs=1e-12)
        assert got == pytest.approx(
            shapely_containment(box[0], box[1], room.boundary, room.height), abs=1e-9
        )

    def test_one_corner_out(self):
        room = _room()
        box = (Pose(4.8, 0.0, 0.5, yaw=math.pi / 4), Extent(1, 1, 1))
        got = measure_containment(box, room)
        expect = shapely_containment(box[0], box[1], room.boundary, room.height)
        assert got == pytest.approx(expect, abs=1e-9)
        assert got == pytest.approx(math.sqrt(2) / 2 - 0.2, abs=1e-12)

    def test_too_tall(self):
        box = (Pose(0, 0, 1.6), Extent(1, 1, 3.2))
        got = measure_containment(box, _room())
        assert got == pytest.approx(0.2, abs=1e-12)

    def test_random_against_shapely(self):
        rng = random.Random(41)
        room = _room(8.0, 2.5)
        for _ in range(200):
            box = random_upright_box(rng, span=6.0)
            expect = shapely_containment(box[0], box[1], room.boundary, room.height)
            assert measure_containment(box, room) == pytest.approx(expect, abs=1e-9)


class TestCollision:
    def test_coincident_unit_cubes(self):
        assert measure_collision(cube(0, 0), cube(0, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        assert measure_collision(cube(0, 0), cube(3, 3)) == 0.0

    def test_quarter_offset(self):
        assert measure_collision(cube(0, 0), cube(0.5, 0.5)) == pytest.approx(0.25, abs=1e-12)

    def test_vertically_separated_no_collision(self):
        a = (Pose(0, 0, 0.5), Extent(1, 1, 1))
        b = (Pose(0, 0, 1.5), Extent(1, 1, 1))  # resting exactly on top
        assert measure_collision(a, b) == 0.0

    def test_random_pairs_against_shapely(self):
        rng = random.Random(13)
        from layoutforge import world_footprint

        for _ in range(200):
            a = random_upright_box(rng, span=2.0)
            b = random_upright_box(rng, span=2.0)
            got = measure_collision(a, b)
            lo_a, hi_a = a[0].z - a[1].dz / 2, a[0].z + a[1].dz / 2
            lo_b, hi_b = b[0].z - b[1].dz / 2, b[0].z + b[1].dz / 2
            if min(hi_a, hi_b) - max(lo_a, lo_b) <= 0:
                assert got == 0.0
            else:
                expect = shapely_intersection_area(world_footprint(*a), world_footprint(*b))
                assert got == pytest.approx(expect, abs=1e-9)


class TestEvaluateTerm:
    def setup_method(self):
        self.layout = {"a": Pose(0, 0, 0.5), "b": Pose(4, 0, 0.5)}
        self.extents = {"a": Extent(1, 1, 1), "b": Extent(1, 1, 1)}
        self.room = _room()

    def test_soft_distance_squared_error(self):
        term = RelationTerm(
            RelationKind.DISTANCE, ("a", "b"), {"target": 1.0}, Soft(weight=2.0)
        )
        res = evaluate_term(term, self.layout, self.room, self.extents)
        assert res.measure == pytest.approx(3.0, abs=1e-12)
        assert res.score == pytest.approx(8.0, abs=1e-12)

    def test_hard_overlap_greater_eq_satisfied(self):
        layout = {"a": Pose(1, 0, 0.5), "b": Pose(1.3, 0, 0.5)}
        term = RelationTerm(
            RelationKind.OVERLAP, ("a", "b"), {"axis": "x"},
            Hard(Comparator.GREATER_EQ, threshold=0.5),
        )
        res = evaluate_term(term, layout, self.room, self.extents)
        assert res.measure == pytest.approx(0.7, abs=1e-12)
        assert res.violation == 0.0

    def test_hard_collision_violation(self):
        layout = {"a": Pose(0, 0, 0.5), "b": Pose(0.5, 0.5, 0.5)}
        term = RelationTerm(
            RelationKind.COLLISION, ("a", "b"), {}, Hard(Comparator.LESS_EQ, threshold=0.0)
        )
        res = evaluate_term(term, layout, self.room, self.extents)
        assert res.violation == pytest.approx(0.25, abs=1e-12)

    def test_unknown_participant(self):
        term = RelationTerm(RelationKind.DISTANCE, ("a", "ghost"), {}, Soft())
        with pytest.raises(UnknownObjectError):
            evaluate_term(term, self.layout, self.room, self.extents)

    def test_arity_validation(self):
        with pytest.raises(TermError):
            RelationTerm(RelationKind.DISTANCE, ("a",), {}, Soft())
        with pytest.raises(TermError):
            RelationTerm(RelationKind.ALIGNMENT, ("a",), {}, Soft())
        with pytest.raises(TermError):
            RelationTerm(RelationKind.CONTAINMENT, ("a", "b"), {}, Hard())

    def test_negative_weight_rejected(self):
        with pytest.raises(TermError):
            RelationTerm(RelationKind.DISTANCE, ("a", "b"), {}, Soft(weight=-1.0))

    def test_within_tol_shaping(self):
        term = RelationTerm(
            RelationKind.DISTANCE, ("a", "b"), {},
            Hard(Comparator.WITHIN_TOL, threshold=2.0, tolerance=0.5),
        )
        res = evaluate_term(term, self.layout, self.room, self.extents)
        # measure 3.0, |3.0 - 2.0| - 0.5 = 0.5
        assert res.violation == pytest.approx(0.5, abs=1e-12)


def _transform_pose(pose, dx, dy, phi):
    c, s = math.cos(phi), math.sin(phi)
    return Pose(
        c * pose.x - s * pose.y + dx,
        s * pose.x + c * pose.y + dy,
        pose.z,
        yaw=pose.yaw + phi,
        pitch=pose.pitch,
        roll=pose.roll,
    )


def _transform_point(p, dx, dy, phi):
    c, s = math.cos(phi), math.sin(phi)
    return (c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy)


class TestMeasureInvariants:
    def test_pairwise_symmetry(self):
        rng = random.Random(17)
        for _ in range(50):
            a = random_upright_box(rng)
            b = random_upright_box(rng)
            assert measure_distance(a, b) == pytest.approx(measure_distance(b, a), abs=1e-12)
            assert measure_proximity(a, b) == pytest.approx(measure_proximity(b, a), abs=1e-12)
            assert measure_collision(a, b) == pytest.approx(measure_collision(b, a), abs=1e-12)
            for axis in ("x", "y", "z"):
                assert measure_overlap(a, b, axis) == pytest.approx(
                    measure_overlap(b, a, axis), abs=1e-12
                )

    def test_all_measures_nonnegative(self):
        rng = random.Random(19)
        room = _room()
        for _ in range(60):
            a = random_upright_box(rng)
            b = random_upright_box(rng)
            assert measure_distance(a, b) >= 0
            assert measure_collision(a, b) >= 0
            assert measure_containment(a, room) >= 0
            assert measure_rel_orientation(a[0], b[0], rng.uniform(0, TAU)) >= 0

    def test_distance_zero_iff_contact_or_overlap(self):
        rng = random.Random(29)
        for _ in range(120):
            a = random_upright_box(rng, span=1.5)
            b = random_upright_box(rng, span=1.5)
            gap = measure_distance(a, b)
            oracle_gap = shapely_gap(*a, *b)
            assert (gap <= 1e-6) == (oracle_gap <= 1e-6)

    def test_rigid_motion_invariance(self):
        rng = random.Random(31)
        for _ in range(40):
            a = random_upright_box(rng, span=2.0)
            b = random_upright_box(rng, span=2.0)
            dx, dy = rng.uniform(-4, 4), rng.uniform(-4, 4)
            phi = rng.uniform(0, TAU)
            ta = (_transform_pose(a[0], dx, dy, phi), a[1])
            tb = (_transform_pose(b[0], dx, dy, phi), b[1])

            assert measure_distance(ta, tb) == pytest.approx(measure_distance(a, b), abs=1e-9)
            assert measure_collision(ta, tb) == pytest.approx(measure_collision(a, b), abs=1e-9)
            assert measure_rel_orientation(ta[0], tb[0], 0.7) == pytest.approx(
                measure_rel_orientation(a[0], b[0], 0.7), abs=1e-9
            )

            room = _room(8.0, 3.0)
            troom = Domain(
                boundary=tuple(_transform_point(p, dx, dy, phi) for p in room.boundary),
                height=room.height,
            )
            assert measure_containment(ta, troom) == pytest.approx(
                measure_containment(a, room), abs=1e-9
            )

            items = [("a", "box", (a[0].x, a[0].y, a[0].z)), ("b", "box", (b[0].x, b[0].y, b[0].z))]
            titems = [("a", "box", (ta[0].x, ta[0].y, ta[0].z)), ("b", "box", (tb[0].x, tb[0].y, tb[0].z))]
            q = (rng.uniform(-2, 2), rng.uniform(-2, 2))
            ang = rng.uniform(0, TAU)
            n = (math.cos(ang), math.sin(ang))
            tq = _transform_point(q, dx, dy, phi)
            tn = _transform_point(n, 0, 0, phi)
            assert measure_symmetry(titems, Reflection(tq, tn)) == pytest.approx(
                measure_symmetry(items, Reflection(q, n)), abs=1e-9
            )

    def test_axis_measures_invariant_under_quarter_turns(self):
        # overlap/alignment reference world axes, so the global yaw must be
        # a quarter turn and the axis remaps with it
        rng = random.Random(37)
        remap = {("x", 1): "y", ("y", 1): "x", ("x", 2): "x", ("y", 2): "y"}
        for _ in range(40):
            a = random_upright_box(rng, span=2.0)
            b = random_upright_box(rng, span=2.0)
            k = rng.choice((1, 2))
            phi = k * math.pi / 2
            dx, dy = rng.uniform(-3, 3), rng.uniform(-3, 3)
            ta = (_transform_pose(a[0], dx, dy, phi), a[1])
            tb = (_transform_pose(b[0], dx, dy, phi), b[1])
            for axis in ("x", "y"):
                new_axis = remap[(axis, k)]
                assert measure_overlap(ta, tb, new_axis) == pytest.approx(
                    measure_overlap(a, b, axis), abs=1e-9
                )
                centers = [(a[0].x, a[0].y), (b[0].x, b[0].y)]
                tcenters = [(ta[0].x, ta[0].y), (tb[0].x, tb[0].y)]
                assert measure_alignment(tcenters, new_axis) == pytest.approx(
                    measure_alignment(centers, axis), abs=1e-9
                )
