"""FastAPI application exposing the layout engine.

All endpoints are stateless POSTs: scene specs, manual content, and task
definitions travel in the request body, results in the response body.
Domain validation errors surface as 422 with the error message.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..forge import ForgeError, ProgramError
from ..oracle import OracleTooLargeError
from ..relations import TermError
from ..scene import SceneError
from ..specfile import SpecError
from ..trajectory import TrajectoryError
from . import ops
from .schemas import (
    ForgeLookupRequest,
    ForgeLookupResponse,
    ForgeRunRequest,
    ForgeRunResponse,
    HealthResponse,
    OracleRequest,
    OracleResponse,
    SolveRequest,
    SolveResponse,
    TrajectoryRequest,
    TrajectoryResponse,
)

_DOMAIN_ERRORS = (
    SpecError,
    SceneError,
    TermError,
    TrajectoryError,
    ForgeError,
    ProgramError,
    OracleTooLargeError,
)

app = FastAPI(
    title="layoutforge",
    version=__version__,
    description="Constraint-based 3D scene layout, trajectories, and verified asset programs",
)


def _run(op, req):
    try:
        return op(req)
    except _DOMAIN_ERRORS as e:
        raise HTTPException(status_code=422, detail=str(e)) from e


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    return _run(ops.solve, req)


@app.post("/oracle", response_model=OracleResponse)
def oracle(req: OracleRequest) -> OracleResponse:
    return _run(ops.oracle, req)


@app.post("/trajectory", response_model=TrajectoryResponse)
def trajectory(req: TrajectoryRequest) -> TrajectoryResponse:
    return _run(ops.trajectory, req)


@app.post("/forge/run", response_model=ForgeRunResponse)
def forge_run(req: ForgeRunRequest) -> ForgeRunResponse:
    return _run(ops.forge_run, req)


@app.post("/forge/lookup", response_model=ForgeLookupResponse)
def forge_lookup(req: ForgeLookupRequest) -> ForgeLookupResponse:
    return _run(ops.forge_lookup, req)
