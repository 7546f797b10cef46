"""Core orchestration logic: routes lifecycle requests to units,
tracks advisory component states, and proxies log reads.

Program naming is ``<component>-<operation>``. The ``stop`` operation
is special-cased: the component's supervised ``start`` program is
stopped through the unit (termination signal with grace escalation)
and the component's own stop script, when present, runs as a one-shot
program afterwards.
"""

from __future__ import annotations

import threading
import time
import xmlrpc.client
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .appmodel import AppModel, ComponentEntry, ComponentState, UnitEndpoint
from .client import UnitClient, UnitUnreachable, make_client


class ManagerError(Exception):
    pass


class UnknownTarget(ManagerError):
    pass


class OperationTimeout(ManagerError):
    pass


class OperationFailed(ManagerError):
    def __init__(self, message: str, program_state: str | None = None):
        super().__init__(message)
        self.program_state = program_state


class OperationConflict(ManagerError):
    pass


class Outcome(Enum):
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"
    TIMEOUT = "TIMEOUT"
    UNREACHABLE = "UNREACHABLE"


@dataclass(frozen=True)
class OperationResult:
    container: str
    component: str
    operation: str
    outcome: Outcome
    final_program_state: str
    duration: float
    exit_status: int | None = None

    def as_dict(self) -> dict:
        return {
            "container": self.container,
            "component": self.component,
            "operation": self.operation,
            "outcome": self.outcome.value,
            "final_program_state": self.final_program_state,
            "duration": self.duration,
            "exit_status": self.exit_status,
        }


_STATE_AFTER = {
    "create": ComponentState.CREATED,
    "configure": ComponentState.CONFIGURED,
    "start": ComponentState.RUNNING,
    "stop": ComponentState.STOPPED,
    "delete": ComponentState.NOT_CREATED,
}

ClientFactory = Callable[..., UnitClient]


def program_name(component: str, operation: str) -> str:
    return f"{component}-{operation}"


class AppManager:
    """Read-only model plus per-component advisory state and routing."""

    def __init__(
        self,
        model: AppModel,
        client_factory: ClientFactory = make_client,
        alias_table: dict[str, tuple[str, int]] | None = None,
        operation_timeout: float = 120.0,
        connect_timeout: float = 3.0,
        probe_ttl: float = 2.0,
    ):
        self.model = model
        self._client_factory = client_factory
        self._alias_table = alias_table or {}
        self.operation_timeout = operation_timeout
        self.connect_timeout = connect_timeout
        self.probe_ttl = probe_ttl
        self._derived: dict[tuple[str, str], ComponentState] = {
            key: ComponentState.NOT_CREATED for key in model.components
        }
        self._derived_lock = threading.Lock()
        self._inflight: dict[tuple[str, str], threading.Lock] = {
            key: threading.Lock() for key in model.components
        }
        self._probe_cache: dict[str, tuple[float, bool]] = {}
        self._probed_running: set[str] = set()

    # -- wiring ------------------------------------------------------------

    def _endpoint(self, container: str) -> UnitEndpoint:
        try:
            return self.model.endpoints[container]
        except KeyError:
            raise UnknownTarget(f"no hosting container '{container}'") from None

    def _client(self, container: str) -> UnitClient:
        endpoint = self._endpoint(container)
        host, port = self._alias_table.get(endpoint.alias, (endpoint.alias, endpoint.port))
        return self._client_factory(
            host=host,
            port=port,
            user=endpoint.user,
            password=endpoint.password,
            timeout=self.connect_timeout,
        )

    def _entry(self, container: str, component: str) -> ComponentEntry:
        if container in self.model.standalone:
            raise UnknownTarget(f"'{container}' is a standalone container")
        entry = self.model.components.get((container, component))
        if entry is None:
            self._endpoint(container)  # distinguishes unknown container
            raise UnknownTarget(f"no component '{component}' on '{container}'")
        return entry

    # -- views -------------------------------------------------------------

    def probe_unit(self, container: str) -> bool:
        """Cheap liveness probe of a unit, cached for a short interval."""
        cached = self._probe_cache.get(container)
        now = time.monotonic()
        if cached is not None and now - cached[0] < self.probe_ttl:
            return cached[1]
        try:
            self._client(container).list_methods()
            alive = True
        except (UnitUnreachable, xmlrpc.client.Fault):
            alive = False
        self._probe_cache[container] = (now, alive)
        if alive:
            self._reconstruct_running(container)
        return alive

    def _reconstruct_running(self, container: str) -> None:
        """Derive RUNNING for components whose start program is up.

        The manager holds no persistent state: after a restart this
        probe rebuilds equivalent derived states for running components.
        """
        if container in self._probed_running:
            return
        try:
            infos = {info["name"]: info for info in self._client(container).get_all_process_info()}
        except (UnitUnreachable, xmlrpc.client.Fault):
            return
        self._probed_running.add(container)
        with self._derived_lock:
            for (c, component), state in self._derived.items():
                if c != container or state is not ComponentState.NOT_CREATED:
                    continue
                info = infos.get(program_name(component, "start"))
                if info is not None and info.get("state") == "RUNNING":
                    self._derived[(c, component)] = ComponentState.RUNNING

    def list_nodes(self) -> list[dict]:
        summaries = []
        for container in self.model.containers():
            standalone = container in self.model.standalone
            summary = {
                "name": container,
                "standalone": standalone,
                "unit_alive": None if standalone else self.probe_unit(container),
                "components": [
                    self._component_summary(entry)
                    for entry in self.model.components_of(container)
                ],
            }
            summaries.append(summary)
        return summaries

    def get_node(self, container: str) -> dict:
        if container in self.model.standalone:
            return {"name": container, "standalone": True, "unit_alive": None, "components": []}
        self._endpoint(container)
        return {
            "name": container,
            "standalone": False,
            "unit_alive": self.probe_unit(container),
            "components": [
                self._component_summary(entry) for entry in self.model.components_of(container)
            ],
        }

    def get_component(self, container: str, component: str) -> dict:
        entry = self._entry(container, component)
        self.probe_unit(container)
        return self._component_summary(entry)

    def _component_summary(self, entry: ComponentEntry) -> dict:
        with self._derived_lock:
            state = self._derived[(entry.container, entry.name)]
        return {
            "container": entry.container,
            "name": entry.name,
            "operations": list(entry.operations),
            "derived_state": state.value,
        }

    # -- lifecycle ---------------------------------------------------------

    def execute_operation(self, container: str, component: str, operation: str) -> OperationResult:
        entry = self._entry(container, component)
        if operation not in entry.operations:
            raise UnknownTarget(f"component '{component}' has no operation '{operation}'")
        lock = self._inflight[(container, component)]
        if not lock.acquire(blocking=False):
            raise OperationConflict(
                f"an operation on ({container}, {component}) is already in flight"
            )
        try:
            started = time.monotonic()
            client = self._client(container)
            if operation == "stop":
                final_state, exit_status = self._run_stop(client, entry)
            elif operation == "start":
                final_state, exit_status = self._run_start(client, entry)
            else:
                final_state, exit_status = self._run_one_shot(
                    client, program_name(component, operation)
                )
            duration = time.monotonic() - started
        finally:
            lock.release()

        with self._derived_lock:
            next_state = _STATE_AFTER.get(operation)
            if next_state is not None:
                self._derived[(container, component)] = next_state
        return OperationResult(
            container=container,
            component=component,
            operation=operation,
            outcome=Outcome.SUCCESS,
            final_program_state=final_state,
            duration=duration,
            exit_status=exit_status,
        )

    def _run_one_shot(self, client: UnitClient, program: str) -> tuple[str, int | None]:
        self._start_program(client, program)
        deadline = time.monotonic() + self.operation_timeout
        while True:
            info = self._info(client, program)
            state = info.get("state")
            if state == "EXITED":
                return state, info.get("exitstatus")
            if state == "FATAL":
                raise OperationFailed(f"program '{program}' failed: {info.get('description')}", state)
            if time.monotonic() > deadline:
                raise OperationTimeout(f"program '{program}' did not settle in time")
            time.sleep(0.1)

    def _run_start(self, client: UnitClient, entry: ComponentEntry) -> tuple[str, int | None]:
        program = program_name(entry.name, "start")
        self._start_program(client, program)
        deadline = time.monotonic() + self.operation_timeout
        while True:
            info = self._info(client, program)
            state = info.get("state")
            if state == "RUNNING":
                return state, None
            if state == "EXITED":
                # short-lived start scripts that hand off are still a success
                return state, info.get("exitstatus")
            if state == "FATAL":
                raise OperationFailed(f"program '{program}' failed: {info.get('description')}", state)
            if time.monotonic() > deadline:
                raise OperationTimeout(f"program '{program}' did not come up in time")
            time.sleep(0.1)

    def _run_stop(self, client: UnitClient, entry: ComponentEntry) -> tuple[str, int | None]:
        start_program = program_name(entry.name, "start")
        final_state = "STOPPED"
        exit_status: int | None = None
        if "start" in entry.runnable or "start" in entry.operations:
            info = self._info(client, start_program)
            if info.get("state") in ("STARTING", "RUNNING"):
                try:
                    info = client.stop_process(start_program, True)
                except xmlrpc.client.Fault as exc:
                    raise self._map_fault(exc, start_program)
                final_state = str(info.get("state"))
        if "stop" in entry.runnable:
            final_state, exit_status = self._run_one_shot(
                client, program_name(entry.name, "stop")
            )
            final_state = "STOPPED"
        return final_state, exit_status

    def _start_program(self, client: UnitClient, program: str) -> None:
        try:
            client.start_process(program, False)
        except xmlrpc.client.Fault as exc:
            raise self._map_fault(exc, program)

    def _info(self, client: UnitClient, program: str) -> dict:
        try:
            return client.get_process_info(program)
        except xmlrpc.client.Fault as exc:
            raise self._map_fault(exc, program)

    @staticmethod
    def _map_fault(fault: xmlrpc.client.Fault, program: str) -> ManagerError:
        if fault.faultCode == 10:
            return UnknownTarget(f"unit knows no program '{program}'")
        if fault.faultCode == 60:
            return OperationConflict(f"program '{program}' is already running")
        if fault.faultCode == 70:
            return OperationFailed(f"program '{program}' is not running")
        return OperationFailed(f"unit fault {fault.faultCode}: {fault.faultString}")

    # -- logs ----------------------------------------------------------------

    def get_component_logs(
        self,
        container: str,
        component: str,
        operation: str | None = None,
        offset: int = 0,
        length: int = 2**16,
    ) -> str:
        entry = self._entry(container, component)
        operation = operation or "start"
        if operation not in entry.operations:
            raise UnknownTarget(f"component '{component}' has no operation '{operation}'")
        client = self._client(container)
        try:
            return client.read_stdout_log(program_name(component, operation), offset, length)
        except xmlrpc.client.Fault as exc:
            raise self._map_fault(exc, program_name(component, operation))
