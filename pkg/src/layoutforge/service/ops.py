"""Service operations: the logic behind each endpoint.

Plain functions over the request/response models so the CLI's in-process
transport can call them directly, without an HTTP round trip.  Domain
errors propagate as the package's ValueError subclasses; the FastAPI app
translates them to 422 responses.
"""

from __future__ import annotations

from dataclasses import replace

from ..forge import (
    EnumeratingGenerator,
    ForgeError,
    Manual,
    ManualRecord,
    Predicate,
    Program,
    SuggestionFollowingGenerator,
    Task,
    run_loop,
)
from ..grid import GridSpec
from ..oracle import oracle_hierarchical
from ..output import format_trace, layout_document, render_svg_text
from ..solver import solve_hierarchical, world_poses
from ..specfile import SpecError, build_scene
from ..trajectory import anchor_frame, apply_to_object, build_trajectory, format_track
from .schemas import (
    ForgeLookupRequest,
    ForgeLookupResponse,
    ForgeRunRequest,
    ForgeRunResponse,
    LookupHit,
    OracleRequest,
    OracleResponse,
    RecordDoc,
    SolveRequest,
    SolveResponse,
    TrajectoryRequest,
    TrajectoryResponse,
)


def _solve_config(parsed, req):
    config = parsed.solver_config
    config = replace(config, seed=req.seed, collect_trace=req.include_trace)
    if req.max_evals is not None:
        config = replace(config, max_evals=req.max_evals)
    if req.restarts is not None:
        config = replace(config, restarts=req.restarts)
    if req.full_6dof is not None:
        config = replace(config, full_6dof=req.full_6dof)
    if req.snap_only:
        config = replace(config, snap=GridSpec(xy_step=req.grid_step))
    return config


def solve(req: SolveRequest) -> SolveResponse:
    parsed = build_scene(req.spec)
    config = _solve_config(parsed, req)
    result = solve_hierarchical(
        parsed.root, parsed.domain, parsed.terms_by_level, config, parsed.assemble_config
    )
    trace = None
    if req.include_trace:
        trace = format_trace({lv.parent_id: lv.solution for lv in result.levels})
    svg = render_svg_text(result, parsed.domain) if req.include_svg else None
    return SolveResponse(
        feasible=result.all_feasible,
        layout=layout_document(result),
        svg=svg,
        trace=trace,
    )


def oracle(req: OracleRequest) -> OracleResponse:
    parsed = build_scene(req.spec)
    grid_kwargs = {"xy_step": req.grid_step, "max_objects": req.max_objects}
    if req.yaw_set is not None:
        grid_kwargs["yaw_set"] = tuple(req.yaw_set)
    grid = GridSpec(**grid_kwargs)
    result = oracle_hierarchical(
        parsed.root, parsed.domain, parsed.terms_by_level, grid, parsed.assemble_config
    )
    return OracleResponse(feasible=result.all_feasible, layout=layout_document(result))


def trajectory(req: TrajectoryRequest) -> TrajectoryResponse:
    parsed = build_scene(req.spec)
    if not parsed.commands:
        raise SpecError("spec declares no trajectory commands")
    if not (0 <= req.command_index < len(parsed.commands)):
        raise SpecError(
            f"command index {req.command_index} out of range 0..{len(parsed.commands) - 1}"
        )
    command = parsed.commands[req.command_index]

    config = replace(parsed.solver_config, seed=req.seed)
    result = solve_hierarchical(
        parsed.root, parsed.domain, parsed.terms_by_level, config, parsed.assemble_config
    )
    poses = world_poses(result.root)
    extents = {n.id: n.extent for c in result.root.children for n in c.walk()}

    oid = command.anchor.object_id
    frame = anchor_frame(poses[oid], extents[oid], command.anchor.relation, command.anchor.distance)
    keyframes = build_trajectory(command, frame)
    if command.subject.kind == "object":
        subject_id = command.subject.object_id
        keyframes = apply_to_object(
            keyframes, subject_id, base_yaw=poses[subject_id].yaw, yaw_hold=command.yaw_hold
        )
        label = f"object:{subject_id}"
    else:
        label = "camera"
    return TrajectoryResponse(
        track=format_track(keyframes, label, req.fps), feasible=result.all_feasible
    )


def _record_doc(rec: ManualRecord) -> RecordDoc:
    return RecordDoc(
        seq=rec.seq,
        task=rec.task_text,
        category=rec.program.category,
        params=rec.program.normalized_params(),
        attempts=rec.attempts,
    )


def _build_generator(doc):
    if doc.type == "enumerating":
        if not doc.programs:
            raise ForgeError("enumerating generator needs a program list")
        return EnumeratingGenerator([Program(p.category, p.params) for p in doc.programs])
    if doc.initial is None:
        raise ForgeError("suggestion generator needs an initial program")
    return SuggestionFollowingGenerator(
        Program(doc.initial.category, doc.initial.params), use_manual=doc.use_manual
    )


def forge_run(req: ForgeRunRequest) -> ForgeRunResponse:
    manual = Manual.loads(req.manual)
    task = Task(
        req.task.text,
        tuple(
            Predicate(p.param, p.op, value=p.value, lo=p.lo, hi=p.hi) for p in req.task.spec
        ),
    )
    generator = _build_generator(req.generator)
    from ..forge import rule_critic

    outcome = run_loop(task, generator, rule_critic, req.max_iters, manual)
    return ForgeRunResponse(
        success=outcome.success,
        attempts=outcome.attempts,
        diagnostic=outcome.diagnostic,
        record=_record_doc(outcome.record) if outcome.record else None,
        manual=manual.dumps(),
    )


def forge_lookup(req: ForgeLookupRequest) -> ForgeLookupResponse:
    manual = Manual.loads(req.manual)
    hits = manual.lookup(req.query, top_k=req.top_k, min_score=req.min_score)
    return ForgeLookupResponse(
        results=[LookupHit(score=score, record=_record_doc(rec)) for score, rec in hits]
    )
