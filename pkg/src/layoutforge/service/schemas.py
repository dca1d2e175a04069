"""Request/response models of the layout service.

The scene-spec document schema is shared with the on-disk format
(layoutforge.specfile); everything the service needs travels in the
request body, so the service itself is stateless.  Manual content is
carried verbatim in the line-delimited manual file format.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..specfile import SceneSpecDoc


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SolveRequest(_Model):
    spec: SceneSpecDoc
    seed: int = 0
    max_evals: int | None = None
    restarts: int | None = None
    full_6dof: bool | None = None
    snap_only: bool = False
    grid_step: float = Field(default=0.5, gt=0)
    include_svg: bool = False
    include_trace: bool = False


class SolveResponse(_Model):
    feasible: bool
    layout: dict
    svg: str | None = None
    trace: str | None = None


class OracleRequest(_Model):
    spec: SceneSpecDoc
    grid_step: float = Field(default=0.25, gt=0)
    yaw_set: list[float] | None = None
    max_objects: int = 3


class OracleResponse(_Model):
    feasible: bool
    layout: dict


class TrajectoryRequest(_Model):
    spec: SceneSpecDoc
    command_index: int = 0
    fps: float = Field(default=24.0, gt=0)
    seed: int = 0


class TrajectoryResponse(_Model):
    track: str
    feasible: bool


class PredicateDoc(_Model):
    param: str
    op: Literal["eq", "range", "le", "ge"]
    value: float | int | str | None = None
    lo: float = 0.0
    hi: float = 0.0


class TaskDoc(_Model):
    text: str
    spec: list[PredicateDoc] = Field(min_length=1)


class ProgramDoc(_Model):
    category: str
    params: dict[str, float | int | str]


class GeneratorDoc(_Model):
    type: Literal["enumerating", "suggestion"]
    programs: list[ProgramDoc] | None = None  # enumerating
    initial: ProgramDoc | None = None  # suggestion
    use_manual: bool = True


class ForgeRunRequest(_Model):
    task: TaskDoc
    generator: GeneratorDoc
    manual: str = ""  # manual file content (line-delimited records)
    max_iters: int = Field(default=8, ge=1)


class RecordDoc(_Model):
    seq: int
    task: str
    category: str
    params: dict[str, float | int | str]
    attempts: int


class ForgeRunResponse(_Model):
    success: bool
    attempts: int
    diagnostic: str | None = None
    record: RecordDoc | None = None
    manual: str = ""  # updated manual content


class ForgeLookupRequest(_Model):
    manual: str
    query: str
    top_k: int = Field(default=3, ge=1)
    min_score: float = 0.2


class LookupHit(_Model):
    score: float
    record: RecordDoc


class ForgeLookupResponse(_Model):
    results: list[LookupHit]


class HealthResponse(_Model):
    status: str
    version: str
