"""Brute-force reference solver on discretized pose grids.

Enumerates every joint assignment of the movable objects to admissible
grid poses and returns the exact discrete optimum; used as ground truth
for the annealing solver's acceptance tests.  Pairwise terms between two
movable objects are evaluated as vectorized candidate matrices (numpy)
when the grid's yaws are quarter turns, falling back to direct scalar
evaluation otherwise; results are identical either way.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

import numpy as np

from .grid import GridSpec, ObjectCandidates, candidates_for
from .problem import LayoutProblem, evaluate, is_feasible
from .relations import (
    Comparator,
    RelationKind,
    RelationTerm,
    Soft,
    evaluate_term,
    resolve_threshold,
)
from .rng import derive_seed
from .scene import Layout, Pose
from .solver import Solution

MAX_COMBINATIONS = 10_000_000

_QUARTER = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


class OracleTooLargeError(ValueError):
    """The joint grid exceeds the enumeration bound."""


def oracle_solve(problem: LayoutProblem, grid: GridSpec) -> Solution:
    """Exhaustive minimum of the objective over the pose grid.

    Returns the feasible assignment with minimal objective, ties broken by
    the lexicographically smallest (object-index-ordered) pose tuple; with
    no feasible assignment, the one minimizing (total violation, objective).
    """
    movable = problem.movable_ids
    if len(movable) > grid.max_objects:
        raise OracleTooLargeError(
            f"instance too large for oracle: {len(movable)} objects > max {grid.max_objects}"
        )
    # cheap pre-check on the unfiltered lattice so absurd grids reject
    # before paying for per-cell footprint filtering
    xs = [p[0] for p in problem.domain.boundary]
    ys = [p[1] for p in problem.domain.boundary]
    bbox_cells = math.ceil((max(xs) - min(xs)) / grid.xy_step) * math.ceil(
        (max(ys) - min(ys)) / grid.xy_step
    )
    raw = float(bbox_cells * len(grid.yaw_set)) ** len(movable)
    if raw > 100.0 * MAX_COMBINATIONS and bbox_cells ** len(movable) > MAX_COMBINATIONS:
        raise OracleTooLargeError(
            f"instance too large for oracle: ~{raw:.2g} grid combinations > {MAX_COMBINATIONS}"
        )
    cand = {
        oid: candidates_for(
            oid, problem.extents[oid], problem.movable_support_z[oid], problem.domain, grid
        )
        for oid in movable
    }
    combos = 1
    for oid in movable:
        combos *= len(cand[oid].poses)
    if combos > MAX_COMBINATIONS:
        raise OracleTooLargeError(
            f"instance too large for oracle: {combos} combinations > {MAX_COMBINATIONS}"
        )
    if combos == 0:
        raise OracleTooLargeError("instance too large for oracle: no grid candidates")

    tables = _TermTables(problem, cand)
    idx = _reduce(problem, cand, tables)

    layout: Layout = dict(problem.fixed_poses)
    for oid, i in zip(movable, idx):
        x, y, yaw = cand[oid].poses[i]
        layout[oid] = Pose(x, y, cand[oid].z, yaw=yaw)
    breakdown = evaluate(problem, layout)
    return Solution(
        layout=layout,
        breakdown=breakdown,
        feasible=is_feasible(breakdown),
        evals_used=combos,
        restart_index=0,
    )


class _TermTables:
    """Per-term candidate value arrays split by movable-participant arity."""

    def __init__(self, problem: LayoutProblem, cand: Mapping[str, ObjectCandidates]):
        self.problem = problem
        self.cand = cand
        self.movable_index = {oid: i for i, oid in enumerate(problem.movable_ids)}
        self.const_soft = 0.0
        self.const_viol = 0.0
        n = len(problem.movable_ids)
        sizes = [len(cand[oid].poses) for oid in problem.movable_ids]
        self.unary_soft = [np.zeros(s) for s in sizes]
        self.unary_viol = [np.zeros(s) for s in sizes]
        self.pair_soft: dict[tuple[int, int], np.ndarray] = {}
        self.pair_viol: dict[tuple[int, int], np.ndarray] = {}
        self.slow_terms: list[RelationTerm] = []

        for term in problem.soft_terms + problem.hard_terms:
            mids = sorted(
                {self.movable_index[p] for p in term.participants if p in self.movable_index}
            )
            if len(mids) == 0:
                v = self._scalar(term, {})
                self._add_const(term, v)
            elif len(mids) == 1:
                self._add_unary(term, mids[0])
            elif len(mids) == 2:
                self._add_pair(term, mids[0], mids[1])
            elif term.kind is RelationKind.ALIGNMENT and term.is_soft:
                # spread decomposes exactly into pairwise squared gaps:
                # sum_i (v_i - mean)^2 == (1/N) sum_{i<j} (v_i - v_j)^2
                self._add_alignment_decomposed(term)
            else:
                self.slow_terms.append(term)

    def _value(self, term: RelationTerm, measure):
        """Vectorized counterpart of evaluate_term's shaping."""
        if isinstance(term.mode, Soft):
            if term.kind in (RelationKind.DISTANCE, RelationKind.OVERLAP):
                target = float(term.params.get("target", 0.0))
                shaped = (measure - target) ** 2
            elif term.kind is RelationKind.PROXIMITY:
                shaped = measure * measure
            else:
                shaped = measure
            return term.mode.weight * shaped
        thr = resolve_threshold(term)
        if term.mode.comparator is Comparator.LESS_EQ:
            return np.maximum(0.0, measure - thr)
        if term.mode.comparator is Comparator.GREATER_EQ:
            return np.maximum(0.0, thr - measure)
        return np.maximum(0.0, np.abs(measure - thr) - term.mode.tolerance)

    def _scalar(self, term: RelationTerm, overrides: Mapping[str, Pose]) -> float:
        p = self.problem
        layout = dict(p.fixed_poses)
        layout.update(overrides)
        res = evaluate_term(term, layout, p.domain, p.extents, p.categories)
        return res.value

    def _add_const(self, term, v):
        if term.is_soft:
            self.const_soft += v
        else:
            self.const_viol += v

    def _add_unary(self, term: RelationTerm, mi: int) -> None:
        oid = self.problem.movable_ids[mi]
        c = self.cand[oid]
        vals = np.empty(len(c.poses))
        # other participants (if any) are fixed objects already in the layout
        for i, (x, y, yaw) in enumerate(c.poses):
            vals[i] = self._scalar(term, {oid: Pose(x, y, c.z, yaw=yaw)})
        if term.is_soft:
            self.unary_soft[mi] += vals
        else:
            self.unary_viol[mi] += vals

    def _add_alignment_decomposed(self, term: RelationTerm) -> None:
        axis = str(term.params.get("axis", "x"))
        k = 1 if axis == "x" else 0
        n = len(term.participants)
        weight = term.mode.weight / n  # type: ignore[union-attr]

        def coord_vec(pid: str):
            if pid in self.movable_index:
                mi = self.movable_index[pid]
                poses = np.asarray(self.cand[self.problem.movable_ids[mi]].poses)
                return mi, poses[:, k]
            return None, (self.problem.fixed_poses[pid].x, self.problem.fixed_poses[pid].y)[k]

        parts = [coord_vec(pid) for pid in term.participants]
        for i in range(n):
            for j in range(i + 1, n):
                (ma, va), (mb, vb) = parts[i], parts[j]
                if ma is None and mb is None:
                    self.const_soft += weight * (va - vb) ** 2
                elif ma is None or mb is None:
                    mi, vec = (mb, vb) if ma is None else (ma, va)
                    const = va if ma is None else vb
                    self.unary_soft[mi] = self.unary_soft[mi] + weight * (vec - const) ** 2
                else:
                    lo, hi = (ma, mb) if ma < mb else (mb, ma)
                    vlo, vhi = (va, vb) if ma < mb else (vb, va)
                    key = (lo, hi)
                    mat = weight * (vlo[:, None] - vhi[None, :]) ** 2
                    self.pair_soft[key] = self.pair_soft.get(key, 0.0) + mat

    def _add_pair(self, term: RelationTerm, mi: int, mj: int) -> None:
        a = self.problem.movable_ids[mi]
        b = self.problem.movable_ids[mj]
        mat = self._pair_measure_matrix(term, a, b)
        vals = self._value(term, mat)
        key = (mi, mj)
        if term.is_soft:
            self.pair_soft[key] = self.pair_soft.get(key, 0.0) + vals
        else:
            self.pair_viol[key] = self.pair_viol.get(key, 0.0) + vals

    def _pair_measure_matrix(self, term: RelationTerm, a: str, b: str) -> np.ndarray:
        ca, cb = self.cand[a], self.cand[b]
        pa = np.asarray(ca.poses)  # (na, 3): x, y, yaw
        pb = np.asarray(cb.poses)
        fast = _fast_pair_measure(term, self.problem, a, b, pa, ca.z, pb, cb.z)
        if fast is not None:
            return fast
        # generic fallback: scalar evaluation over the candidate product
        p = self.problem
        na, nb = len(pa), len(pb)
        out = np.empty((na, nb))
        for i in range(na):
            pose_a = Pose(pa[i, 0], pa[i, 1], ca.z, yaw=pa[i, 2])
            for j in range(nb):
                pose_b = Pose(pb[j, 0], pb[j, 1], cb.z, yaw=pb[j, 2])
                layout = dict(p.fixed_poses)
                layout[a] = pose_a
                layout[b] = pose_b
                res = evaluate_term(term, layout, p.domain, p.extents, p.categories)
                out[i, j] = res.measure
        return out


def _fast_pair_measure(term, problem, a, b, pa, za, pb, zb):
    """Vectorized raw measures for the common kinds; None if unsupported."""
    kind = term.kind
    ya = pa[:, 2][:, None]
    yb = pb[:, 2][None, :]

    if kind is RelationKind.RELATIVE_ORIENTATION:
        target = float(term.params.get("target", 0.0))
        first_is_a = term.participants[0] == a
        d = (yb - ya) if first_is_a else (ya - yb)
        return np.abs(_wrap_pi(d - target))

    if kind is RelationKind.ALIGNMENT and len(term.participants) == 2:
        axis = str(term.params.get("axis", "x"))
        k = 1 if axis == "x" else 0
        va = pa[:, k][:, None]
        vb = pb[:, k][None, :]
        return 0.5 * (va - vb) ** 2

    if kind is RelationKind.DISTANCE and term.params.get("metric", "gap") == "center":
        dx = pb[:, 0][None, :] - pa[:, 0][:, None]
        dy = pb[:, 1][None, :] - pa[:, 1][:, None]
        dz = zb - za
        return np.sqrt(dx * dx + dy * dy + dz * dz)

    ea = problem.extents[a]
    eb = problem.extents[b]

    if kind is RelationKind.OVERLAP:
        axis = str(term.params.get("axis", "x"))
        if axis == "z":
            lo_a, hi_a = za - 0.5 * ea.dz, za + 0.5 * ea.dz
            lo_b, hi_b = zb - 0.5 * eb.dz, zb + 0.5 * eb.dz
            v = max(0.0, min(hi_a, hi_b) - max(lo_a, lo_b))
            return np.full((len(pa), len(pb)), v)
        k = 0 if axis == "x" else 1
        ha = _half_width(ya[:, 0], ea, k)[:, None]
        hb = _half_width(yb[0, :], eb, k)[None, :]
        ca = pa[:, k][:, None]
        cb = pb[:, k][None, :]
        return np.maximum(0.0, np.minimum(ca + ha, cb + hb) - np.maximum(ca - ha, cb - hb))

    # gap / collision need axis-aligned footprints: quarter-turn yaws only
    if kind in (RelationKind.DISTANCE, RelationKind.PROXIMITY, RelationKind.COLLISION):
        if not (_quarter_only(pa[:, 2]) and _quarter_only(pb[:, 2])):
            return None
        hxa = _half_width(ya[:, 0], ea, 0)[:, None]
        hya = _half_width(ya[:, 0], ea, 1)[:, None]
        hxb = _half_width(yb[0, :], eb, 0)[None, :]
        hyb = _half_width(yb[0, :], eb, 1)[None, :]
        dxc = np.abs(pb[:, 0][None, :] - pa[:, 0][:, None])
        dyc = np.abs(pb[:, 1][None, :] - pa[:, 1][:, None])
        if kind is RelationKind.COLLISION:
            iv = max(
                0.0,
                min(za + 0.5 * ea.dz, zb + 0.5 * eb.dz)
                - max(za - 0.5 * ea.dz, zb - 0.5 * eb.dz),
            )
            if iv <= 0.0:
                return np.zeros((len(pa), len(pb)))
            ox = np.maximum(0.0, hxa + hxb - dxc)
            oy = np.maximum(0.0, hya + hyb - dyc)
            return ox * oy
        gx = np.maximum(0.0, dxc - (hxa + hxb))
        gy = np.maximum(0.0, dyc - (hya + hyb))
        d_xy = np.hypot(gx, gy)
        g_z = max(za - 0.5 * ea.dz - (zb + 0.5 * eb.dz), zb - 0.5 * eb.dz - (za + 0.5 * ea.dz))
        if g_z <= 0.0:
            return d_xy
        return np.hypot(d_xy, g_z)

    return None


def _half_width(yaws: np.ndarray, extent, axis: int) -> np.ndarray:
    c = np.abs(np.cos(yaws))
    s = np.abs(np.sin(yaws))
    if axis == 0:
        return 0.5 * (c * extent.dx + s * extent.dy)
    return 0.5 * (s * extent.dx + c * extent.dy)


def _quarter_only(yaws: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(np.min(np.abs(yaws[:, None] - np.asarray(_QUARTER + (2 * math.pi,))[None, :]), axis=1) <= tol))


def _wrap_pi(d: np.ndarray) -> np.ndarray:
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def _reduce(problem: LayoutProblem, cand, tables: _TermTables) -> tuple[int, ...]:
    """Find the best joint assignment under (feasible, L, lexicographic poses)."""
    movable = problem.movable_ids
    n = len(movable)
    tol = 1e-6

    if tables.slow_terms:
        return _reduce_slow(problem, cand, tables, tol)

    if n == 1:
        L = tables.unary_soft[0] + tables.const_soft
        V = tables.unary_viol[0] + tables.const_viol
        return (_pick(L, V, tol),)

    if n == 2:
        L = (
            tables.unary_soft[0][:, None]
            + tables.unary_soft[1][None, :]
            + tables.pair_soft.get((0, 1), 0.0)
            + tables.const_soft
        )
        V = (
            tables.unary_viol[0][:, None]
            + tables.unary_viol[1][None, :]
            + tables.pair_viol.get((0, 1), 0.0)
            + tables.const_viol
        )
        flat = _pick(L.ravel(), V.ravel(), tol)
        return np.unravel_index(flat, L.shape)  # type: ignore[return-value]

    if n == 3:
        best = None  # (feas_rank, L, i, j, k)
        zero = 0.0
        s01 = tables.pair_soft.get((0, 1))
        s02 = tables.pair_soft.get((0, 2))
        s12 = tables.pair_soft.get((1, 2), zero)
        v01 = tables.pair_viol.get((0, 1))
        v02 = tables.pair_viol.get((0, 2))
        v12 = tables.pair_viol.get((1, 2), zero)
        base_L = (
            tables.unary_soft[1][:, None] + tables.unary_soft[2][None, :] + s12 + tables.const_soft
        )
        base_V = (
            tables.unary_viol[1][:, None] + tables.unary_viol[2][None, :] + v12 + tables.const_viol
        )
        n0 = len(tables.unary_soft[0])
        for i in range(n0):
            L = base_L + tables.unary_soft[0][i]
            V = base_V + tables.unary_viol[0][i]
            if s01 is not None:
                L = L + s01[i][:, None]
            if s02 is not None:
                L = L + s02[i][None, :]
            if v01 is not None:
                V = V + v01[i][:, None]
            if v02 is not None:
                V = V + v02[i][None, :]
            feas = V <= tol
            if feas.any():
                Lf = np.where(feas, L, np.inf)
                flat = int(np.argmin(Lf))
                lval = Lf.flat[flat]
                rank = (0, lval)
            else:
                vmin = V.min()
                Lv = np.where(V == vmin, L, np.inf)
                flat = int(np.argmin(Lv))
                lval = Lv.flat[flat]
                rank = (1, vmin, lval)
            if best is None or rank < best[0]:
                j, k = np.unravel_index(flat, L.shape)
                best = (rank, (i, int(j), int(k)))
        assert best is not None
        return best[1]

    raise OracleTooLargeError(f"oracle supports at most 3 movable objects, got {n}")


def _pick(L: np.ndarray, V: np.ndarray, tol: float) -> int:
    feas = V <= tol
    if feas.any():
        return int(np.argmin(np.where(feas, L, np.inf)))
    vmin = V.min()
    return int(np.argmin(np.where(V == vmin, L, np.inf)))


def _reduce_slow(problem, cand, tables, tol) -> tuple[int, ...]:
    """Scalar enumeration fallback for terms coupling 3+ movable objects."""
    movable = problem.movable_ids
    pose_lists = [
        [Pose(x, y, cand[oid].z, yaw=yaw) for x, y, yaw in cand[oid].poses]
        for oid in movable
    ]
    best_key = None
    best_idx = None
    for idx in itertools.product(*(range(len(pl)) for pl in pose_lists)):
        layout: Layout = dict(problem.fixed_poses)
        for oid, pl, i in zip(movable, pose_lists, idx):
            layout[oid] = pl[i]
        b = evaluate(problem, layout)
        v = b.total_violation
        key = (0, b.objective) if v <= tol else (1, v, b.objective)
        if best_key is None or key < best_key:
            best_key = key
            best_idx = idx
    assert best_idx is not None
    return best_idx


def oracle_hierarchical(
    root,
    domain,
    terms_by_level: Mapping[str | None, Sequence] | None = None,
    grid: GridSpec = GridSpec(0.25),
    assemble_config=None,
):
    """Exhaustively solve every tree level (levels are independent subproblems)."""
    from .problem import AssembleConfig, assemble
    from .solver import HierarchicalResult, LevelSolution

    terms_by_level = terms_by_level or {}
    assemble_config = assemble_config or AssembleConfig()
    levels: list[LevelSolution] = []

    def solve_node(node, is_root: bool):
        if not node.children:
            return node
        key = None if is_root else node.id
        problem = assemble(
            node, domain, terms_by_level.get(key, ()), assemble_config, is_root=is_root
        )
        solution = oracle_solve(problem, grid)
        levels.append(LevelSolution(key, solution))
        new_children = []
        for child in node.children:
            solved = child.with_local_pose(solution.layout[child.id])
            new_children.append(solve_node(solved, False))
        return node.with_children(tuple(new_children))

    solved_root = solve_node(root, True)
    return HierarchicalResult(solved_root, tuple(levels))


def mc_polygon_area(
    poly_a, poly_b, samples: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of the intersection area of two convex polygons.

    Samples uniformly over poly_a's bounding box; returns (estimate,
    standard error).  The standard error uses the smoothed hit fraction
    (hits+1)/(n+2) so a zero-hit draw still reports an honest uncertainty.
    """
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0, "mc")))
    ax = np.asarray([p[0] for p in poly_a])
    ay = np.asarray([p[1] for p in poly_a])
    xmin, xmax = float(ax.min()), float(ax.max())
    ymin, ymax = float(ay.min()), float(ay.max())
    box_area = (xmax - xmin) * (ymax - ymin)
    xs = rng.uniform(xmin, xmax, samples)
    ys = rng.uniform(ymin, ymax, samples)
    inside = _inside_mask(xs, ys, poly_a) & _inside_mask(xs, ys, poly_b)
    hits = int(inside.sum())
    p_smooth = (hits + 1) / (samples + 2)
    estimate = hits / samples * box_area
    stderr = box_area * math.sqrt(p_smooth * (1.0 - p_smooth) / samples)
    return estimate, stderr


def _inside_mask(xs: np.ndarray, ys: np.ndarray, poly) -> np.ndarray:
    mask = np.ones(xs.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        mask &= (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1) >= 0.0
    return mask
