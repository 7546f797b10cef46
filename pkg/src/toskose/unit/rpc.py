"""Supervisor-compatible XML-RPC API of a unit.

Serves ``/RPC2`` over HTTP with Basic authentication. The method
subset and fault numbering follow Supervisor so existing clients can
talk to a unit unchanged: 10 BAD_NAME, 60 ALREADY_STARTED,
70 NOT_RUNNING.
"""

from __future__ import annotations

import base64
import threading
from xmlrpc.client import Fault
from xmlrpc.server import SimpleXMLRPCRequestHandler, SimpleXMLRPCServer

from .supervisor import (
    AlreadyStarted,
    NoSuchProgram,
    NotRunning,
    SpawnFailed,
    Supervisor,
)

FAULT_BAD_NAME = 10
FAULT_SPAWN_ERROR = 50
FAULT_ALREADY_STARTED = 60
FAULT_NOT_RUNNING = 70


class UnitRpcInterface:
    """Dispatch target exposing the ``supervisor.*`` method namespace."""

    def __init__(self, supervisor: Supervisor):
        self._supervisor = supervisor

    def _dispatch(self, method: str, params: tuple):
        handler = self._methods().get(method)
        if handler is None:
            raise Fault(1, f"UNKNOWN_METHOD: {method}")
        try:
            return handler(*params)
        except NoSuchProgram as exc:
            raise Fault(FAULT_BAD_NAME, f"BAD_NAME: {exc}") from exc
        except AlreadyStarted as exc:
            raise Fault(FAULT_ALREADY_STARTED, f"ALREADY_STARTED: {exc}") from exc
        except NotRunning as exc:
            raise Fault(FAULT_NOT_RUNNING, f"NOT_RUNNING: {exc}") from exc
        except SpawnFailed as exc:
            raise Fault(FAULT_SPAWN_ERROR, f"SPAWN_ERROR: {exc}") from exc

    def _methods(self) -> dict:
        return {
            "supervisor.startProcess": self.start_process,
            "supervisor.stopProcess": self.stop_process,
            "supervisor.getProcessInfo": self.get_process_info,
            "supervisor.getAllProcessInfo": self.get_all_process_info,
            "supervisor.readProcessStdoutLog": self.read_process_stdout_log,
            "system.listMethods": self.list_methods,
        }

    def list_methods(self) -> list[str]:
        return sorted(self._methods())

    def start_process(self, name: str, wait: bool = True) -> dict:
        return self._supervisor.start_program(name, wait=bool(wait)).as_dict()

    def stop_process(self, name: str, wait: bool = True) -> dict:
        return self._supervisor.stop_program(name, wait=bool(wait)).as_dict()

    def get_process_info(self, name: str) -> dict:
        return self._supervisor.get_process_info(name).as_dict()

    def get_all_process_info(self) -> list[dict]:
        return [info.as_dict() for info in self._supervisor.get_all_process_info()]

    def read_process_stdout_log(self, name: str, offset: int, length: int) -> str:
        return self._supervisor.read_stdout_log(name, int(offset), int(length))


class _AuthenticatedHandler(SimpleXMLRPCRequestHandler):
    rpc_paths = ("/RPC2",)

    def parse_request(self) -> bool:
        if not super().parse_request():
            return False
        if self._authorized():
            return True
        self.send_error(401, "Unauthorized")
        return False

    def _authorized(self) -> bool:
        expected = self.server.credentials  # type: ignore[attr-defined]
        header = self.headers.get("Authorization", "")
        if not header.startswith("Basic "):
            return False
        try:
            decoded = base64.b64decode(header[6:]).decode()
        except (ValueError, UnicodeDecodeError):
            return False
        user, _, password = decoded.partition(":")
        return (user, password) == expected

    def log_message(self, format: str, *args) -> None:  # quiet by default
        pass


class UnitRpcServer:
    """Threaded HTTP server hosting the XML-RPC interface."""

    def __init__(self, supervisor: Supervisor, host: str | None = None, port: int | None = None):
        http = supervisor.config.http
        self._server = SimpleXMLRPCServer(
            (host if host is not None else (http.host or "0.0.0.0"), port if port is not None else http.port),
            requestHandler=_AuthenticatedHandler,
            allow_none=False,
            logRequests=False,
        )
        self._server.credentials = (http.user, http.password)  # type: ignore[attr-defined]
        self._server.register_instance(UnitRpcInterface(supervisor))
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def serve_in_background(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True, name="unit-rpc")
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
