"""Generator/critic verification loop with a persistent, ever-growing manual.

The loop proposes asset programs for a task, executes them against a toy
parametric grammar, and lets a critic accept or reject the result with
directional improvement hints.  Accepted (task, program) pairs are
committed to an append-only manual that later runs can query to seed
their first attempts.  The reference generator and critic are fully
deterministic, so every loop outcome is reproducible.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .scene import Extent


class ProgramError(ValueError):
    """Program violates its category schema."""


class ForgeError(ValueError):
    pass


# --------------------------------------------------------------------------
# toy parametric grammar

@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "int" | "float" | "enum"
    lo: float = 0.0
    hi: float = 0.0
    choices: tuple[str, ...] = ()


SCHEMAS: dict[str, tuple[ParamSpec, ...]] = {
    "table": (
        ParamSpec("top_dx", "float", 0.3, 3.0),
        ParamSpec("top_dy", "float", 0.3, 2.0),
        ParamSpec("top_dz", "float", 0.02, 0.1),
        ParamSpec("leg_count", "int", 1, 6),
        ParamSpec("leg_radius", "float", 0.01, 0.08),
        ParamSpec("height", "float", 0.3, 1.2),
    ),
    "shelf": (
        ParamSpec("width", "float", 0.3, 2.0),
        ParamSpec("depth", "float", 0.15, 0.8),
        ParamSpec("height", "float", 0.5, 2.5),
        ParamSpec("shelf_count", "int", 1, 8),
        ParamSpec("board_thickness", "float", 0.01, 0.05),
    ),
    "sofa": (
        ParamSpec("width", "float", 0.8, 3.0),
        ParamSpec("depth", "float", 0.6, 1.2),
        ParamSpec("height", "float", 0.6, 1.1),
        ParamSpec("seat_height", "float", 0.25, 0.5),
        ParamSpec("cushion_count", "int", 1, 4),
    ),
    "lamp": (
        ParamSpec("base_radius", "float", 0.05, 0.3),
        ParamSpec("pole_height", "float", 0.3, 1.8),
        ParamSpec("shade_radius", "float", 0.08, 0.4),
        ParamSpec("shade_height", "float", 0.1, 0.5),
        ParamSpec("shade_shape", "enum", choices=("cone", "drum")),
    ),
}


@dataclass(frozen=True)
class Program:
    category: str
    params: Mapping[str, object]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", dict(self.params))

    def normalized_params(self) -> dict[str, object]:
        """Params in schema declaration order (stable file layout)."""
        schema = SCHEMAS[self.category]
        return {spec.name: self.params[spec.name] for spec in schema}


def validate_program(program: Program) -> None:
    schema = SCHEMAS.get(program.category)
    if schema is None:
        raise ProgramError(f"invalid program: unknown category {program.category!r}")
    names = {s.name for s in schema}
    extra = set(program.params) - names
    if extra:
        raise ProgramError(f"invalid program: unknown parameters {sorted(extra)}")
    for spec in schema:
        if spec.name not in program.params:
            raise ProgramError(f"invalid program: missing parameter {spec.name!r}")
        v = program.params[spec.name]
        if spec.kind == "enum":
            if v not in spec.choices:
                raise ProgramError(
                    f"invalid program: {spec.name}={v!r} not in {spec.choices}"
                )
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ProgramError(f"invalid program: {spec.name}={v!r} is not a finite number")
        if spec.kind == "int" and int(v) != v:
            raise ProgramError(f"invalid program: {spec.name}={v!r} must be an integer")
        if not (spec.lo <= v <= spec.hi):
            raise ProgramError(
                f"invalid program: {spec.name}={v!r} outside [{spec.lo}, {spec.hi}]"
            )


@dataclass(frozen=True)
class Part:
    name: str
    extent: Extent
    offset: tuple[float, float, float]  # part center in the asset frame


@dataclass(frozen=True)
class AssetDescriptor:
    category: str
    extent: Extent  # axis-aligned bound of all parts
    parts: tuple[Part, ...]
    flags: Mapping[str, bool]

    @property
    def part_count(self) -> int:
        return len(self.parts)


def toy_execute(program: Program) -> AssetDescriptor:
    """Deterministically derive the part list for a schema-valid program."""
    validate_program(program)
    builder = {
        "table": _build_table,
        "shelf": _build_shelf,
        "sofa": _build_sofa,
        "lamp": _build_lamp,
    }[program.category]
    parts, flags = builder(program.params)
    return AssetDescriptor(program.category, _bound(parts), tuple(parts), dict(flags))


def _bound(parts: Sequence[Part]) -> Extent:
    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    for p in parts:
        half = (p.extent.dx / 2, p.extent.dy / 2, p.extent.dz / 2)
        for i in range(3):
            lo[i] = min(lo[i], p.offset[i] - half[i])
            hi[i] = max(hi[i], p.offset[i] + half[i])
    return Extent(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2])


def _build_table(p):
    top_dx, top_dy, top_dz = p["top_dx"], p["top_dy"], p["top_dz"]
    r, height = p["leg_radius"], p["height"]
    n = int(p["leg_count"])
    parts = [Part("top", Extent(top_dx, top_dy, top_dz), (0.0, 0.0, height - top_dz / 2))]
    leg_h = height - top_dz
    ix = top_dx / 2 - r
    iy = top_dy / 2 - r
    spots = [(ix, iy), (-ix, iy), (-ix, -iy), (ix, -iy), (0.0, iy), (0.0, -iy)]
    for i in range(n):
        x, y = spots[i]
        parts.append(Part(f"leg{i}", Extent(2 * r, 2 * r, leg_h), (x, y, leg_h / 2)))
    flags = {
        "legs_fit_under_top": 2 * r <= min(top_dx, top_dy) / 2,
        "legs_have_height": leg_h > 0,
    }
    return parts, flags


def _build_shelf(p):
    w, d, h = p["width"], p["depth"], p["height"]
    n = int(p["shelf_count"])
    t = p["board_thickness"]
    parts = [
        Part("side_left", Extent(t, d, h), (-(w - t) / 2, 0.0, h / 2)),
        Part("side_right", Extent(t, d, h), ((w - t) / 2, 0.0, h / 2)),
    ]
    for i in range(n):
        z = (i + 0.5) * h / n
        parts.append(Part(f"board{i}", Extent(w - 2 * t, d, t), (0.0, 0.0, z)))
    flags = {
        "boards_fit_between_sides": w > 2 * t,
        "boards_thinner_than_gap": n * t < h,
    }
    return parts, flags


def _build_sofa(p):
    w, d, h = p["width"], p["depth"], p["height"]
    seat = p["seat_height"]
    n = int(p["cushion_count"])
    aw = 0.08 * w
    bd = 0.25 * d
    inner = w - 2 * aw
    parts = [
        Part("base", Extent(inner, d, seat), (0.0, 0.0, seat / 2)),
        Part("back", Extent(inner, bd, h - seat), (0.0, -(d - bd) / 2, seat + (h - seat) / 2)),
        Part("arm_left", Extent(aw, d, 0.8 * h), (-(w - aw) / 2, 0.0, 0.4 * h)),
        Part("arm_right", Extent(aw, d, 0.8 * h), ((w - aw) / 2, 0.0, 0.4 * h)),
    ]
    cw = inner / n
    for i in range(n):
        x = -inner / 2 + (i + 0.5) * cw
        parts.append(
            Part(f"cushion{i}", Extent(0.95 * cw, 0.9 * (d - bd), 0.08), (x, bd / 2, seat + 0.04))
        )
    flags = {"seat_below_back": seat < h, "cushions_fit": 0.95 * cw > 0.05}
    return parts, flags


def _build_lamp(p):
    br, ph = p["base_radius"], p["pole_height"]
    sr, sh = p["shade_radius"], p["shade_height"]
    base_h = 0.03
    parts = [
        Part("base", Extent(2 * br, 2 * br, base_h), (0.0, 0.0, base_h / 2)),
        Part("pole", Extent(0.04, 0.04, ph), (0.0, 0.0, base_h + ph / 2)),
        Part(
            f"shade_{p['shade_shape']}",
            Extent(2 * sr, 2 * sr, sh),
            (0.0, 0.0, base_h + ph + sh / 2),
        ),
    ]
    flags = {"stable_base": br >= 0.3 * sr, "shade_clears_pole": sr > 0.02}
    return parts, flags


# --------------------------------------------------------------------------
# tasks and the rule critic

@dataclass(frozen=True)
class Predicate:
    """One requirement over a program parameter or derived descriptor field.

    ``param`` may be "category", a schema parameter, or one of the derived
    fields extent_dx / extent_dy / extent_dz / part_count.
    ``op`` is eq | range | le | ge; eq carries ``value``, range carries
    (lo, hi), le/ge carry ``value`` as the bound.
    """

    param: str
    op: str
    value: object = None
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self) -> None:
        if self.op not in ("eq", "range", "le", "ge"):
            raise ForgeError(f"unknown predicate op {self.op!r}")


@dataclass(frozen=True)
class Task:
    text: str
    spec: tuple[Predicate, ...]

    def __post_init__(self) -> None:
        if not self.text:
            raise ForgeError("task text must be non-empty")
        if not self.spec:
            raise ForgeError("task spec must be non-empty")
        object.__setattr__(self, "spec", tuple(self.spec))


@dataclass(frozen=True)
class Suggestion:
    param: str
    action: str  # "increase" | "decrease" | "set"
    target: object  # bound or value to move toward


@dataclass(frozen=True)
class CritiqueReport:
    accepted: bool
    failures: tuple[tuple[Predicate, object], ...]
    suggestions: tuple[Suggestion, ...]

    def __post_init__(self) -> None:
        if self.accepted != (not self.failures):
            raise ForgeError("accepted flag must match empty failure list")


def _observe(pred: Predicate, asset: AssetDescriptor, program: Program):
    name = pred.param
    if name == "category":
        return program.category
    if name in program.params:
        return program.params[name]
    derived = {
        "extent_dx": asset.extent.dx,
        "extent_dy": asset.extent.dy,
        "extent_dz": asset.extent.dz,
        "part_count": asset.part_count,
    }
    if name in derived:
        return derived[name]
    raise ForgeError(f"predicate references unknown field {name!r}")


def rule_critic(task: Task, asset: AssetDescriptor, program: Program) -> CritiqueReport:
    """Deterministic predicate check with directional improvement hints."""
    failures: list[tuple[Predicate, object]] = []
    suggestions: list[Suggestion] = []
    for pred in task.spec:
        v = _observe(pred, asset, program)
        if pred.op == "eq":
            if isinstance(v, (int, float)) and isinstance(pred.value, (int, float)):
                ok = abs(float(v) - float(pred.value)) <= 1e-9
            else:
                ok = v == pred.value
            if not ok:
                failures.append((pred, v))
                suggestions.append(Suggestion(pred.param, "set", pred.value))
        elif pred.op == "range":
            if not (pred.lo <= v <= pred.hi):  # type: ignore[operator]
                failures.append((pred, v))
                # target the far edge: halving toward it is guaranteed to
                # enter the range instead of stalling at the near boundary
                if v < pred.lo:  # type: ignore[operator]
                    suggestions.append(Suggestion(pred.param, "increase", pred.hi))
                else:
                    suggestions.append(Suggestion(pred.param, "decrease", pred.lo))
        elif pred.op == "le":
            if not v <= pred.value:  # type: ignore[operator]
                failures.append((pred, v))
                suggestions.append(Suggestion(pred.param, "decrease", pred.value))
        elif pred.op == "ge":
            if not v >= pred.value:  # type: ignore[operator]
                failures.append((pred, v))
                suggestions.append(Suggestion(pred.param, "increase", pred.value))
    return CritiqueReport(not failures, tuple(failures), tuple(suggestions))


# --------------------------------------------------------------------------
# manual store

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


@dataclass(frozen=True)
class ManualRecord:
    seq: int  # commit order; doubles as the logical commit timestamp
    task_text: str
    program: Program
    attempts: int


class Manual:
    """Append-only store of accepted (task, program) pairs with a token index."""

    def __init__(self) -> None:
        self.records: list[ManualRecord] = []
        self._keys: set[tuple[str, str, tuple]] = set()
        self._token_index: dict[str, set[int]] = {}

    def __len__(self) -> int:
        return len(self.records)

    @staticmethod
    def _key(task_text: str, program: Program):
        return (
            task_text,
            program.category,
            tuple(sorted(program.params.items())),
        )

    def commit(self, task_text: str, program: Program, attempts: int) -> tuple[ManualRecord, bool]:
        """Append a record; exact (task, program) duplicates are no-ops.

        Returns (record, created); created=False flags an already-present pair.
        """
        key = self._key(task_text, program)
        if key in self._keys:
            for rec in self.records:
                if self._key(rec.task_text, rec.program) == key:
                    return rec, False
        record = ManualRecord(len(self.records), task_text, program, attempts)
        self.records.append(record)
        self._keys.add(key)
        for token in tokenize(task_text):
            self._token_index.setdefault(token, set()).add(record.seq)
        return record, True

    def lookup(self, query: str, top_k: int = 3, min_score: float = 0.2) -> list[tuple[float, ManualRecord]]:
        """Records ranked by token Jaccard similarity to the query text."""
        q = tokenize(query)
        if not q:
            return []
        candidate_seqs: set[int] = set()
        for token in q:
            candidate_seqs |= self._token_index.get(token, set())
        scored = []
        for seq in candidate_seqs:
            rec = self.records[seq]
            toks = tokenize(rec.task_text)
            score = len(q & toks) / len(q | toks)
            if score >= min_score:
                scored.append((score, rec))
        scored.sort(key=lambda sr: (-sr[0], sr[1].seq))
        return scored[:top_k]

    # ---- persistence: line-delimited records, fields in fixed order ----

    def dumps(self) -> str:
        lines = []
        for rec in self.records:
            doc = {
                "seq": rec.seq,
                "task": rec.task_text,
                "category": rec.program.category,
                "params": rec.program.normalized_params(),
                "attempts": rec.attempts,
            }
            lines.append(json.dumps(doc, separators=(",", ":")))
        return "".join(line + "\n" for line in lines)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Manual":
        manual = cls()
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as e:
                raise ForgeError(f"manual line {i + 1}: invalid record ({e})") from e
            program = Program(doc["category"], doc["params"])
            rec, created = manual.commit(doc["task"], program, int(doc["attempts"]))
            if not created:
                raise ForgeError(f"manual line {i + 1}: duplicate record")
            if rec.seq != int(doc["seq"]):
                raise ForgeError(
                    f"manual line {i + 1}: sequence {doc['seq']} does not match position {rec.seq}"
                )
        return manual

    @classmethod
    def load(cls, path) -> "Manual":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


def manual_commit(manual: Manual, task: Task, program: Program, attempts: int):
    return manual.commit(task.text, program, attempts)


def manual_lookup(manual: Manual, task: Task | str, top_k: int = 3, min_score: float = 0.2):
    query = task.text if isinstance(task, Task) else task
    return manual.lookup(query, top_k, min_score)


# --------------------------------------------------------------------------
# the loop

Generator = Callable[[Task, Sequence[tuple[Program, CritiqueReport]], Sequence[tuple[float, ManualRecord]]], Program]
Critic = Callable[[Task, AssetDescriptor, Program], CritiqueReport]


@dataclass(frozen=True)
class LoopOutcome:
    success: bool
    attempts: int
    record: ManualRecord | None = None
    last_report: CritiqueReport | None = None
    diagnostic: str | None = None


def run_loop(
    task: Task,
    generator: Generator,
    critic: Critic,
    max_iters: int,
    manual: Manual,
) -> LoopOutcome:
    """Iterate generator -> execute -> critic until acceptance or max_iters.

    On acceptance the (task, program) pair is committed to the manual; a
    failed run leaves the manual untouched.  Generator, executor, or
    critic exceptions end the run as a Failure carrying the diagnostic.
    """
    if max_iters < 1:
        raise ForgeError("max_iters must be >= 1")
    history: list[tuple[Program, CritiqueReport]] = []
    retrieved = manual.lookup(task.text)
    for attempt in range(1, max_iters + 1):
        try:
            program = generator(task, tuple(history), retrieved)
        except Exception as e:  # noqa: BLE001 - faults become Failure outcomes
            return LoopOutcome(False, attempt, diagnostic=f"generator fault: {e}")
        try:
            asset = toy_execute(program)
        except ProgramError as e:
            return LoopOutcome(False, attempt, diagnostic=f"executor fault: {e}")
        try:
            report = critic(task, asset, program)
        except Exception as e:  # noqa: BLE001
            return LoopOutcome(False, attempt, diagnostic=f"critic fault: {e}")
        if report.accepted:
            record, _ = manual.commit(task.text, program, attempt)
            return LoopOutcome(True, attempt, record=record, last_report=report)
        history.append((program, report))
    return LoopOutcome(False, max_iters, last_report=history[-1][1])


# --------------------------------------------------------------------------
# reference generators

@dataclass
class EnumeratingGenerator:
    """Cycles deterministically through a fixed program sequence."""

    programs: Sequence[Program]

    def __call__(self, task, history, retrieved) -> Program:
        if not self.programs:
            raise ForgeError("no programs to enumerate")
        return self.programs[len(history) % len(self.programs)]


@dataclass
class SuggestionFollowingGenerator:
    """Starts from a seed program and follows the critic's hints.

    Each flagged numeric parameter moves halfway toward the suggested
    bound; "set" suggestions apply the exact value.  If the manual
    retrieval produced a hit for the same category, its program seeds the
    first attempt instead of the configured initial program.
    """

    initial: Program
    use_manual: bool = True

    def __call__(self, task, history, retrieved) -> Program:
        if not history:
            if self.use_manual:
                for _, rec in retrieved:
                    if rec.program.category == self.initial.category:
                        return rec.program
            return self.initial
        program, report = history[-1]
        params = dict(program.params)
        for s in report.suggestions:
            if s.param not in params:
                continue
            cur = params[s.param]
            if s.action == "set":
                params[s.param] = s.target
            elif isinstance(cur, (int, float)) and isinstance(s.target, (int, float)):
                moved = (float(cur) + float(s.target)) / 2.0
                if isinstance(cur, int) and not isinstance(cur, bool):
                    moved = round(moved)
                params[s.param] = moved
        return Program(program.category, params)
