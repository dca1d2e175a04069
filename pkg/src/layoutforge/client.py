"""Thin client over the layout service.

Without a server URL the client invokes the service operations in
process, exchanging the exact same request/response models; with one it
speaks HTTP via httpx.  The CLI is built on this client, so `--server`
switches it between embedded and remote operation.
"""

from __future__ import annotations

import httpx

from .service import ops
from .service.schemas import (
    ForgeLookupRequest,
    ForgeLookupResponse,
    ForgeRunRequest,
    ForgeRunResponse,
    OracleRequest,
    OracleResponse,
    SolveRequest,
    SolveResponse,
    TrajectoryRequest,
    TrajectoryResponse,
)


class ServiceError(RuntimeError):
    """Remote endpoint returned an error response."""


class LayoutForgeClient:
    def __init__(self, server: str | None = None, timeout: float = 600.0):
        self._http = httpx.Client(base_url=server, timeout=timeout) if server else None

    def close(self) -> None:
        if self._http is not None:
            self._http.close()

    def __enter__(self) -> "LayoutForgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _call(self, path: str, req, response_model, op):
        if self._http is None:
            return op(req)
        resp = self._http.post(path, json=req.model_dump(mode="json"))
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(f"{path} failed ({resp.status_code}): {detail}")
        return response_model.model_validate(resp.json())

    def solve(self, req: SolveRequest) -> SolveResponse:
        return self._call("/solve", req, SolveResponse, ops.solve)

    def oracle(self, req: OracleRequest) -> OracleResponse:
        return self._call("/oracle", req, OracleResponse, ops.oracle)

    def trajectory(self, req: TrajectoryRequest) -> TrajectoryResponse:
        return self._call("/trajectory", req, TrajectoryResponse, ops.trajectory)

    def forge_run(self, req: ForgeRunRequest) -> ForgeRunResponse:
        return self._call("/forge/run", req, ForgeRunResponse, ops.forge_run)

    def forge_lookup(self, req: ForgeLookupRequest) -> ForgeLookupResponse:
        return self._call("/forge/lookup", req, ForgeLookupResponse, ops.forge_lookup)
