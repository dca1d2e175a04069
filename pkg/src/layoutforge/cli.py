"""Command-line interface.

A thin client over the layout service: each subcommand builds a request
model, sends it through LayoutForgeClient (in-process by default, HTTP
with --server), and writes the returned artifacts to local files.

Exit codes: 0 success, 2 solved-but-infeasible (or forge loop failure),
1 usage or processing error.  The default seed comes from --seed, then
the LAYOUTFORGE_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .client import LayoutForgeClient, ServiceError
from .service.schemas import (
    ForgeLookupRequest,
    ForgeRunRequest,
    GeneratorDoc,
    OracleRequest,
    SolveRequest,
    TaskDoc,
    TrajectoryRequest,
)
from .specfile import SceneSpecDoc, SpecError, parse_spec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; exit 2 is reserved for "solved but infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("LAYOUTFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise SpecError(f"LAYOUTFORGE_SEED must be an integer, got {env!r}") from e
    return 0


def _load_spec_doc(path: str) -> SceneSpecDoc:
    data = Path(path).read_bytes()
    return parse_spec(data).doc


def _write(path: str | None, content: str) -> None:
    if path is None:
        sys.stdout.write(content)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)


def _layout_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_solve(args) -> int:
    doc = _load_spec_doc(args.spec)
    req = SolveRequest(
        spec=doc,
        seed=_resolve_seed(args.seed),
        max_evals=args.max_evals,
        restarts=args.restarts,
        full_6dof=True if args.full_6dof else None,
        snap_only=args.snap_only,
        grid_step=args.grid_step,
        include_svg=args.svg is not None,
        include_trace=args.trace is not None,
    )
    with LayoutForgeClient(args.server) as client:
        resp = client.solve(req)
    _write(args.out, _layout_json(resp.layout))
    if args.svg is not None:
        _write(args.svg, resp.svg or "")
    if args.trace is not None:
        _write(args.trace, resp.trace or "")
    if not resp.feasible:
        print("solved but infeasible (see layout for violations)", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_oracle(args) -> int:
    doc = _load_spec_doc(args.spec)
    req = OracleRequest(spec=doc, grid_step=args.grid_step, max_objects=args.max_objects)
    with LayoutForgeClient(args.server) as client:
        resp = client.oracle(req)
    _write(args.out, _layout_json(resp.layout))
    return EXIT_OK if resp.feasible else EXIT_INFEASIBLE


def cmd_traj(args) -> int:
    doc = _load_spec_doc(args.spec)
    req = TrajectoryRequest(
        spec=doc, command_index=args.command, fps=args.fps, seed=_resolve_seed(args.seed)
    )
    with LayoutForgeClient(args.server) as client:
        resp = client.trajectory(req)
    _write(args.out, resp.track)
    return EXIT_OK if resp.feasible else EXIT_INFEASIBLE


def _load_task_file(path: str) -> tuple[TaskDoc, GeneratorDoc]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SpecError(f"task file line {e.lineno}: {e.msg}") from e
    if not isinstance(raw, dict) or "generator" not in raw:
        raise SpecError("task file needs 'text', 'spec', and 'generator' fields")
    gen = GeneratorDoc.model_validate(raw.pop("generator"))
    task = TaskDoc.model_validate(raw)
    return task, gen


def cmd_forge_run(args) -> int:
    task, generator = _load_task_file(args.task)
    manual_path = Path(args.manual)
    manual_text = manual_path.read_text(encoding="utf-8") if manual_path.exists() else ""
    req = ForgeRunRequest(
        task=task, generator=generator, manual=manual_text, max_iters=args.max_iters
    )
    with LayoutForgeClient(args.server) as client:
        resp = client.forge_run(req)
    with open(manual_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(resp.manual)
    if resp.success:
        print(f"accepted after {resp.attempts} attempt(s); committed record {resp.record.seq}")
        return EXIT_OK
    detail = resp.diagnostic or "critic never accepted"
    print(f"failed after {resp.attempts} attempt(s): {detail}", file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_forge_lookup(args) -> int:
    manual_path = Path(args.manual)
    manual_text = manual_path.read_text(encoding="utf-8") if manual_path.exists() else ""
    req = ForgeLookupRequest(
        manual=manual_text, query=args.query, top_k=args.top_k, min_score=args.min_score
    )
    with LayoutForgeClient(args.server) as client:
        resp = client.forge_lookup(req)
    for hit in resp.results:
        doc = {"score": hit.score, **hit.record.model_dump()}
        print(json.dumps(doc, separators=(",", ":")))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="layoutforge", description=__doc__)
    p.add_argument("--version", action="version", version=f"layoutforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_server(sp):
        sp.add_argument("--server", default=None, help="service URL (default: in-process)")

    sp = sub.add_parser("solve", help="anneal a scene layout")
    sp.add_argument("spec", help="scene-spec JSON file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None, help="layout JSON output (default stdout)")
    sp.add_argument("--svg", default=None, help="top-down SVG output")
    sp.add_argument("--trace", default=None, help="accepted-move trace output")
    sp.add_argument("--full-6dof", action="store_true")
    sp.add_argument("--max-evals", type=int, default=None)
    sp.add_argument("--restarts", type=int, default=None)
    sp.add_argument("--snap-only", action="store_true", help="restrict moves to the grid")
    sp.add_argument("--grid-step", type=float, default=0.5)
    add_server(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exhaustive grid reference solve")
    sp.add_argument("spec")
    sp.add_argument("--grid-step", type=float, default=0.25)
    sp.add_argument("--max-objects", type=int, default=3)
    sp.add_argument("--out", default=None)
    add_server(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("traj", help="build a trajectory track from the spec")
    sp.add_argument("spec")
    sp.add_argument("--command", type=int, default=0, help="index into the spec's trajectories")
    sp.add_argument("--fps", type=float, default=24.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    add_server(sp)
    sp.set_defaults(func=cmd_traj)

    fp = sub.add_parser("forge", help="generator/critic loop over the asset grammar")
    fsub = fp.add_subparsers(dest="forge_command", required=True)

    sp = fsub.add_parser("run", help="run the loop for a task file")
    sp.add_argument("--task", required=True, help="task JSON (text, spec, generator)")
    sp.add_argument("--manual", required=True, help="manual file (created if absent)")
    sp.add_argument("--max-iters", type=int, default=8)
    add_server(sp)
    sp.set_defaults(func=cmd_forge_run)

    sp = fsub.add_parser("lookup", help="query the manual")
    sp.add_argument("--manual", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--top-k", type=int, default=3)
    sp.add_argument("--min-score", type=float, default=0.2)
    add_server(sp)
    sp.set_defaults(func=cmd_forge_lookup)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ServiceError, ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
