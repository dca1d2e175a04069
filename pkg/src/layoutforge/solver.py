"""Simulated annealing over layout poses with Metropolis-Hastings acceptance,
plus the top-down hierarchical driver over the object tree.

Hard constraints enter the annealed objective as an escalating penalty:
L-hat = L + W * total_violation, with W multiplied by 10 on each restart
that ends infeasible.  One solver run is single-threaded and fully
deterministic given (problem, config); restarts use independent derived
streams and merge by (feasibility, L-hat, restart index).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .grid import GridSpec, ObjectCandidates, candidates_for
from .problem import (
    AssembleConfig,
    Breakdown,
    DEFAULT_FEASIBILITY_TOL,
    LayoutProblem,
    assemble,
    evaluate,
    is_feasible,
)
from .relations import EvalCache, evaluate_term
from .rng import derive_seed, stream
from .scene import (
    Domain,
    Layout,
    ObjectNode,
    Pose,
    TiltedObjectError,
    compose_pose,
)

SNAP_YAWS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


@dataclass(frozen=True)
class MoveProbs:
    translate: float = 0.5
    rotate_jitter: float = 0.2
    rotate_snap: float = 0.1
    swap: float = 0.2

    def __post_init__(self) -> None:
        vals = (self.translate, self.rotate_jitter, self.rotate_snap, self.swap)
        if any(v < 0 for v in vals) or abs(sum(vals) - 1.0) > 1e-9:
            raise ValueError("move probabilities must be >= 0 and sum to 1")


@dataclass(frozen=True)
class AnnealConfig:
    seed: int = 0
    t0: float | None = None  # None = calibrate from 100 probe proposals
    alpha: float = 0.95
    iters_per_temp: int | None = None  # None = 100 * movable count
    t_min_ratio: float = 1e-4
    max_evals: int = 200_000  # per restart
    move_probs: MoveProbs = MoveProbs()
    sigma_xy: float | None = None  # None = 5% of domain diameter
    sigma_yaw: float = 0.25
    penalty_w0: float = 1e3
    restarts: int = 3
    feasibility_tol: float = DEFAULT_FEASIBILITY_TOL
    snap: GridSpec | None = None  # restrict moves to the oracle grid
    full_6dof: bool = False
    collect_trace: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")
        for name in ("max_evals", "restarts"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.iters_per_temp is not None and self.iters_per_temp <= 0:
            raise ValueError("iters_per_temp must be positive")


@dataclass(frozen=True)
class TraceRecord:
    restart_index: int
    eval_index: int
    temperature: float
    augmented: float
    best_augmented: float


@dataclass(frozen=True)
class Solution:
    layout: Layout
    breakdown: Breakdown
    feasible: bool
    evals_used: int
    restart_index: int
    trace: tuple[TraceRecord, ...] = ()


def metropolis_accept(delta_l: float, temperature: float, u: float) -> bool:
    """Accept improving moves always, worsening moves with prob exp(-dL/T)."""
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    if delta_l <= 0.0:
        return True
    return u < math.exp(-delta_l / temperature)


def init_layout(
    problem: LayoutProblem,
    rng: random.Random,
    snap: Mapping[str, ObjectCandidates] | None = None,
) -> Layout:
    """Random starting layout: rejection-sampled positions, quarter-turn yaws.

    Positions are drawn uniformly over the domain bounding box until the
    point falls inside the boundary (<= 100 tries, then the domain
    centroid); z comes from the support rule.  In snap mode each object
    starts on a uniformly drawn admissible grid pose instead.
    """
    from .geometry import polygon_centroid

    layout: Layout = {}
    boundary = problem.domain.boundary
    xs = [p[0] for p in boundary]
    ys = [p[1] for p in boundary]
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    for oid in problem.movable_ids:
        z = problem.movable_support_z[oid]
        if snap is not None:
            cands = snap[oid].poses
            x, y, yaw = cands[rng.randrange(len(cands))]
            layout[oid] = Pose(x, y, z, yaw=yaw)
            continue
        pos = None
        for _ in range(100):
            x = xmin + rng.random() * (xmax - xmin)
            y = ymin + rng.random() * (ymax - ymin)
            if problem.domain.contains_point((x, y)):
                pos = (x, y)
                break
        if pos is None:
            pos = polygon_centroid(boundary)
        yaw = SNAP_YAWS[rng.randrange(4)]
        layout[oid] = Pose(pos[0], pos[1], z, yaw=yaw)
    for oid, pose in problem.fixed_poses.items():
        layout[oid] = pose
    return layout


def propose_move(
    layout: Layout,
    problem: LayoutProblem,
    rng: random.Random,
    config: AnnealConfig,
    snap: Mapping[str, ObjectCandidates] | None = None,
) -> tuple[Layout, tuple[str, ...]]:
    """Draw one move and return (new layout, ids whose pose changed).

    Moves: Translate (Gaussian xy jitter of one object), RotateJitter
    (Gaussian yaw jitter), RotateSnap (yaw to a quarter turn), Swap
    (exchange the optimized coordinates of two objects; identity when only
    one object is movable).  Snap mode redirects Translate/Rotate moves to
    uniformly drawn admissible grid poses.
    """
    ids = problem.movable_ids
    n = len(ids)
    probs = config.move_probs
    u = rng.random()
    new_layout = dict(layout)

    if u < probs.translate:
        oid = ids[rng.randrange(n)]
        pose = layout[oid]
        if snap is not None:
            cells = snap[oid].cells_by_yaw.get(pose.yaw, ())
            if not cells:
                return new_layout, ()
            x, y = cells[rng.randrange(len(cells))]
            new_layout[oid] = replace(pose, x=x, y=y)
        else:
            sigma = _sigma_xy(problem, config)
            dx = rng.gauss(0.0, sigma)
            dy = rng.gauss(0.0, sigma)
            if config.full_6dof:
                dz = rng.gauss(0.0, sigma)
                new_layout[oid] = replace(pose, x=pose.x + dx, y=pose.y + dy, z=pose.z + dz)
            else:
                new_layout[oid] = replace(pose, x=pose.x + dx, y=pose.y + dy)
        return new_layout, (oid,)

    u -= probs.translate
    if u < probs.rotate_jitter:
        oid = ids[rng.randrange(n)]
        pose = layout[oid]
        if snap is not None:
            yaws = snap[oid].yaws_by_cell.get((pose.x, pose.y), ())
            if not yaws:
                return new_layout, ()
            yaw = yaws[rng.randrange(len(yaws))]
            new_layout[oid] = replace(pose, yaw=yaw)
        elif config.full_6dof:
            axis = rng.randrange(3)
            d = rng.gauss(0.0, config.sigma_yaw)
            if axis == 0:
                new_layout[oid] = replace(pose, yaw=pose.yaw + d)
            elif axis == 1:
                new_layout[oid] = replace(pose, pitch=pose.pitch + d)
            else:
                new_layout[oid] = replace(pose, roll=pose.roll + d)
        else:
            d = rng.gauss(0.0, config.sigma_yaw)
            new_layout[oid] = replace(pose, yaw=pose.yaw + d)
        return new_layout, (oid,)

    u -= probs.rotate_jitter
    if u < probs.rotate_snap:
        oid = ids[rng.randrange(n)]
        pose = layout[oid]
        if snap is not None:
            yaws = snap[oid].yaws_by_cell.get((pose.x, pose.y), ())
            if not yaws:
                return new_layout, ()
            yaw = yaws[rng.randrange(len(yaws))]
        else:
            yaw = SNAP_YAWS[rng.randrange(4)]
        new_layout[oid] = replace(pose, yaw=yaw)
        return new_layout, (oid,)

    # swap
    if n == 1:
        return new_layout, ()
    i = rng.randrange(n)
    j = rng.randrange(n - 1)
    if j >= i:
        j += 1
    a, b = ids[i], ids[j]
    pa, pb = layout[a], layout[b]
    if config.full_6dof:
        new_layout[a], new_layout[b] = pb, pa
    else:
        # z stays per-object: the support rule owns the vertical coordinate
        new_layout[a] = replace(pb, z=pa.z)
        new_layout[b] = replace(pa, z=pb.z)
    return new_layout, (a, b)


def _sigma_xy(problem: LayoutProblem, config: AnnealConfig) -> float:
    if config.sigma_xy is not None:
        return config.sigma_xy
    return 0.05 * problem.domain.diagonal


class _ChainState:
    """Current layout with per-term values kept incrementally up to date.

    Per-term values are always exact recomputations for the current poses,
    so sums match a from-scratch `evaluate` bit for bit (same order, same
    fsum).  Only terms touching a moved object are recomputed.
    """

    def __init__(self, problem: LayoutProblem, layout: Layout):
        self.problem = problem
        self.layout = dict(layout)
        self.cache = EvalCache(self.layout, problem.extents)
        self.soft_vals: list[float] = []
        self.hard_vals: list[float] = []
        self._touching: dict[str, list[tuple[bool, int]]] = {
            oid: [] for oid in problem.all_ids
        }
        for idx, term in enumerate(problem.soft_terms):
            for pid in term.participants:
                self._touching[pid].append((True, idx))
        for idx, term in enumerate(problem.hard_terms):
            for pid in term.participants:
                self._touching[pid].append((False, idx))
        self._full_refresh()

    def _full_refresh(self) -> None:
        p = self.problem
        self.soft_vals = [
            evaluate_term(t, self.layout, p.domain, p.extents, p.categories, self.cache).score
            for t in p.soft_terms
        ]
        self.hard_vals = [
            evaluate_term(t, self.layout, p.domain, p.extents, p.categories, self.cache).violation
            for t in p.hard_terms
        ]

    def objective(self) -> float:
        return math.fsum(self.soft_vals)

    def violation(self) -> float:
        return math.fsum(self.hard_vals)

    def augmented(self, w: float) -> float:
        return self.objective() + w * self.violation()

    def apply(self, new_layout: Layout, moved: Sequence[str]):
        """Apply a move atomically; returns an undo token for `revert`.

        If any term evaluation fails (e.g. a tilted proposal hits a
        footprint measure) the partial update is rolled back before the
        exception propagates, so the chain state stays consistent.
        """
        p = self.problem
        old_poses = {oid: self.layout[oid] for oid in moved}
        term_ids: set[tuple[bool, int]] = set()
        for oid in moved:
            term_ids.update(self._touching[oid])
            self.layout[oid] = new_layout[oid]
            self.cache.invalidate(oid)
        old_vals = []
        try:
            for is_soft, idx in term_ids:
                term = p.soft_terms[idx] if is_soft else p.hard_terms[idx]
                res = evaluate_term(term, self.layout, p.domain, p.extents, p.categories, self.cache)
                if is_soft:
                    old_vals.append((is_soft, idx, self.soft_vals[idx]))
                    self.soft_vals[idx] = res.score
                else:
                    old_vals.append((is_soft, idx, self.hard_vals[idx]))
                    self.hard_vals[idx] = res.violation
        except Exception:
            self.revert((old_poses, old_vals))
            raise
        return (old_poses, old_vals)

    def revert(self, token) -> None:
        old_poses, old_vals = token
        for oid, pose in old_poses.items():
            self.layout[oid] = pose
            self.cache.invalidate(oid)
        for is_soft, idx, val in old_vals:
            if is_soft:
                self.soft_vals[idx] = val
            else:
                self.hard_vals[idx] = val


def anneal(problem: LayoutProblem, config: AnnealConfig) -> Solution:
    """Anneal the augmented objective; best solution across restarts.

    T0 (when not given) is the standard deviation of the augmented
    objective over 100 probe proposals from the initial layout, floored at
    1e-6; the temperature then cools geometrically by alpha every
    iters_per_temp proposals until it drops below t_min_ratio * T0 or the
    per-restart evaluation budget runs out.  If the budget ends with no
    feasible layout the best infeasible solution is returned with
    feasible=False.
    """
    w = config.penalty_w0 * max(1.0, problem.soft_weight_sum)
    snap_ctx = _snap_context(problem, config)

    best: dict | None = None
    total_evals = 0
    traces: list[TraceRecord] = []
    for r in range(config.restarts):
        cand, evals, trace = _run_restart(problem, config, r, w, snap_ctx)
        total_evals += evals
        traces.extend(trace)
        if best is None or _better(cand, best):
            best = cand
        if not cand["feasible"]:
            w *= 10.0
    assert best is not None

    breakdown = evaluate(problem, best["layout"])
    return Solution(
        layout=best["layout"],
        breakdown=breakdown,
        feasible=is_feasible(breakdown, config.feasibility_tol),
        evals_used=total_evals,
        restart_index=best["restart"],
        trace=tuple(traces),
    )


def _better(a: dict, b: dict) -> bool:
    """Strict (feasibility, augmented, restart) improvement; ties keep b."""
    if a["feasible"] != b["feasible"]:
        return a["feasible"]
    if a["augmented"] != b["augmented"]:
        return a["augmented"] < b["augmented"]
    return False


def _snap_context(problem: LayoutProblem, config: AnnealConfig):
    if config.snap is None:
        return None
    return {
        oid: candidates_for(
            oid,
            problem.extents[oid],
            problem.movable_support_z[oid],
            problem.domain,
            config.snap,
        )
        for oid in problem.movable_ids
    }


def _run_restart(problem, config, restart_index, w, snap_ctx):
    tol = config.feasibility_tol
    rng_init = stream(config.seed, restart_index, "init")
    rng_chain = stream(config.seed, restart_index, "chain")
    rng_t0 = stream(config.seed, restart_index, "t0")

    state = _ChainState(problem, init_layout(problem, rng_init, snap_ctx))
    evals = 1
    aug_cur = state.augmented(w)
    feas_cur = state.violation() <= tol

    best = {
        "layout": dict(state.layout),
        "augmented": aug_cur,
        "feasible": feas_cur,
        "restart": restart_index,
    }
    best_aug_seen = aug_cur  # running min over every evaluation; trace column

    t0 = config.t0
    if t0 is None:
        probes = []
        for _ in range(100):
            proposal, moved = propose_move(state.layout, problem, rng_t0, config, snap_ctx)
            if moved:
                try:
                    token = state.apply(proposal, moved)
                except TiltedObjectError:
                    evals += 1
                    continue
                probes.append(state.augmented(w))
                state.revert(token)
            else:
                probes.append(aug_cur)
            evals += 1
        t0 = _pstdev(probes) if probes else 0.0
    t0 = max(t0, 1e-6)

    temperature = t0
    t_stop = config.t_min_ratio * t0
    iters_per_temp = config.iters_per_temp or 100 * problem.n
    trace: list[TraceRecord] = []
    step_in_temp = 0

    while evals < config.max_evals and temperature >= t_stop:
        proposal, moved = propose_move(state.layout, problem, rng_chain, config, snap_ctx)
        u = rng_chain.random()
        evals += 1
        if moved:
            try:
                token = state.apply(proposal, moved)
            except TiltedObjectError:
                token = None
            if token is None:
                accepted = False
                aug_new = math.inf
            else:
                aug_new = state.augmented(w)
                if aug_new < best_aug_seen:
                    best_aug_seen = aug_new
                feas_new = state.violation() <= tol
                cand = {
                    "feasible": feas_new,
                    "augmented": aug_new,
                }
                if _better(cand, best):
                    best = {
                        "layout": dict(state.layout),
                        "augmented": aug_new,
                        "feasible": feas_new,
                        "restart": restart_index,
                    }
                accepted = metropolis_accept(aug_new - aug_cur, temperature, u)
                if accepted:
                    aug_cur = aug_new
                else:
                    state.revert(token)
        else:
            # degenerate move (e.g. swap with one object): identity proposal
            aug_new = aug_cur
            accepted = metropolis_accept(0.0, temperature, u)

        if accepted and config.collect_trace:
            trace.append(
                TraceRecord(restart_index, evals, temperature, aug_cur, best_aug_seen)
            )
        step_in_temp += 1
        if step_in_temp >= iters_per_temp:
            temperature *= config.alpha
            step_in_temp = 0

    return best, evals, trace


def _pstdev(values: Sequence[float]) -> float:
    n = len(values)
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)


@dataclass(frozen=True)
class LevelSolution:
    parent_id: str | None  # None = the root (domain) level
    solution: Solution


@dataclass(frozen=True)
class HierarchicalResult:
    root: ObjectNode
    levels: tuple[LevelSolution, ...]

    @property
    def all_feasible(self) -> bool:
        return all(lv.solution.feasible for lv in self.levels)


def solve_hierarchical(
    root: ObjectNode,
    domain: Domain,
    terms_by_level: Mapping[str | None, Sequence] | None = None,
    config: AnnealConfig = AnnealConfig(),
    assemble_config: AssembleConfig = AssembleConfig(),
) -> HierarchicalResult:
    """Solve each tree level top-down in its parent's local frame.

    ``root`` is the synthetic scene node whose children are the top-level
    objects; ``terms_by_level`` maps a parent id (None for the root level)
    to the user terms among that parent's children.  Levels are solved
    depth-first; each level gets an independent seed derived from
    (config.seed, level ordinal).  Infeasible levels are flagged in the
    report, never raised.
    """
    terms_by_level = terms_by_level or {}
    levels: list[LevelSolution] = []
    ordinal = 0

    def solve_node(node: ObjectNode, is_root: bool) -> ObjectNode:
        nonlocal ordinal
        if not node.children:
            return node
        key = None if is_root else node.id
        problem = assemble(
            node,
            domain,
            terms_by_level.get(key, ()),
            assemble_config,
            is_root=is_root,
        )
        level_config = replace(
            config, seed=derive_seed(config.seed, ordinal, "level")
        )
        ordinal += 1
        solution = anneal(problem, level_config)
        levels.append(LevelSolution(key, solution))
        new_children = []
        for child in node.children:
            solved = child.with_local_pose(solution.layout[child.id])
            new_children.append(solve_node(solved, False))
        return node.with_children(tuple(new_children))

    solved_root = solve_node(root, True)
    return HierarchicalResult(solved_root, tuple(levels))


def world_poses(root: ObjectNode) -> dict[str, Pose]:
    """World pose of every object, composing local poses along the tree path."""
    out: dict[str, Pose] = {}

    def visit(node: ObjectNode, frame: Pose) -> None:
        world = compose_pose(frame, node.local_pose)
        out[node.id] = world
        for child in node.children:
            visit(child, world)

    for child in root.children:
        visit(child, root.local_pose)
    return out
