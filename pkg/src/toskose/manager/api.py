"""Versioned REST surface of the manager.

All routes live under ``/api/v1``; JSON in, JSON out. HTTP Basic
authentication uses the manager credentials and is disabled in
development mode.
"""

from __future__ import annotations

import secrets

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.security import HTTPBasic, HTTPBasicCredentials

from .client import UnitUnreachable
from .service import (
    AppManager,
    ManagerError,
    OperationConflict,
    OperationFailed,
    OperationTimeout,
    UnknownTarget,
)

API_PREFIX = "/api/v1"

_basic = HTTPBasic(auto_error=False)


def _status_for(exc: ManagerError) -> int:
    if isinstance(exc, UnknownTarget):
        return 404
    if isinstance(exc, OperationConflict):
        return 409
    if isinstance(exc, OperationTimeout):
        return 504
    return 500


def create_app(
    manager: AppManager,
    auth_enabled: bool = True,
    user: str | None = None,
    password: str | None = None,
) -> FastAPI:
    app = FastAPI(title="toskose-manager", docs_url=None, redoc_url=None)
    expected_user = user if user is not None else str(manager.model.config.manager.user)
    expected_password = (
        password if password is not None else str(manager.model.config.manager.password)
    )

    def require_auth(credentials: HTTPBasicCredentials | None = Depends(_basic)) -> None:
        if not auth_enabled:
            return
        if (
            credentials is None
            or not secrets.compare_digest(credentials.username, expected_user)
            or not secrets.compare_digest(credentials.password, expected_password)
        ):
            raise HTTPException(
                status_code=401,
                detail="invalid credentials",
                headers={"WWW-Authenticate": "Basic"},
            )

    @app.exception_handler(ManagerError)
    async def manager_error_handler(request: Request, exc: ManagerError):
        payload = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, OperationFailed) and exc.program_state:
            payload["program_state"] = exc.program_state
        return JSONResponse(status_code=_status_for(exc), content=payload)

    @app.exception_handler(UnitUnreachable)
    async def unreachable_handler(request: Request, exc: UnitUnreachable):
        return JSONResponse(
            status_code=502,
            content={"error": "UnitUnreachable", "detail": str(exc)},
        )

    @app.get(API_PREFIX + "/node", dependencies=[Depends(require_auth)])
    def list_nodes():
        return manager.list_nodes()

    @app.get(API_PREFIX + "/node/{container}", dependencies=[Depends(require_auth)])
    def get_node(container: str):
        return manager.get_node(container)

    @app.get(
        API_PREFIX + "/node/{container}/{component}/log",
        dependencies=[Depends(require_auth)],
        response_class=PlainTextResponse,
    )
    def get_logs(
        container: str,
        component: str,
        operation: str | None = None,
        offset: int = 0,
        length: int = 2**16,
    ):
        return manager.get_component_logs(container, component, operation, offset, length)

    @app.get(
        API_PREFIX + "/node/{container}/{component}",
        dependencies=[Depends(require_auth)],
    )
    def get_component(container: str, component: str):
        return manager.get_component(container, component)

    @app.post(
        API_PREFIX + "/node/{container}/{component}/{operation}",
        dependencies=[Depends(require_auth)],
    )
    def execute(container: str, component: str, operation: str):
        return manager.execute_operation(container, component, operation).as_dict()

    return app
