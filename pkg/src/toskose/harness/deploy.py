"""Launching and tearing down a local deployment.

Each hosting service gets a sandbox populated from its build context
and a unit process listening on a freshly allocated local port; the
manager process receives the alias table so it reaches units without
hard-coded endpoints. Standalone services run declared stub commands
(default: a plain TCP acceptor).
"""

from __future__ import annotations

import json
import os
import shutil
import signal
import socket
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..packager.compose import ComposeModel, NETWORK_NAME

READY_TIMEOUT = 15.0

#: accepts TCP connections and lingers, standing in for a real image
DEFAULT_STUB_COMMAND = (
    f"{sys.executable} -c \""
    "import socket,os;"
    "s=socket.socket();s.bind(('127.0.0.1',int(os.environ['STUB_PORT'])));s.listen();"
    "[s.accept()[0].close() for _ in iter(int,1)]\""
)


class HarnessError(Exception):
    pass


class PortExhausted(HarnessError):
    pass


class UnknownAlias(HarnessError):
    pass


class UnitFailedToStart(HarnessError):
    pass


@dataclass
class HarnessDeployment:
    root: Path
    alias_table: dict[str, tuple[str, int]] = field(default_factory=dict)
    sandboxes: dict[str, Path] = field(default_factory=dict)
    processes: dict[str, subprocess.Popen] = field(default_factory=dict)
    stub_services: set[str] = field(default_factory=set)
    manager_service: str | None = None
    _torn_down: bool = False

    def endpoint(self, alias: str) -> tuple[str, int]:
        try:
            return self.alias_table[alias]
        except KeyError:
            raise UnknownAlias(f"no service with alias '{alias}'") from None

    def manager_url(self) -> str:
        assert self.manager_service is not None
        host, port = self.alias_table[self.manager_service]
        return f"http://{host}:{port}"

    def teardown(self, grace: float = 10.0) -> None:
        teardown(self, grace=grace)


def _free_port() -> int:
    try:
        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            return sock.getsockname()[1]
    except OSError as exc:
        raise PortExhausted(f"cannot allocate a local port: {exc}") from exc


def _service_env(service: dict) -> dict[str, str]:
    env: dict[str, str] = {}
    for item in service.get("environment", []):
        key, _, value = str(item).partition("=")
        env[key] = value
    return env


def _service_alias(name: str, service: dict) -> str:
    aliases = (service.get("networks") or {}).get(NETWORK_NAME, {}).get("aliases") or []
    return aliases[0] if aliases else name


def _wait_listening(endpoints: dict[str, tuple[str, int]], deployment: "HarnessDeployment",
                    timeout: float = READY_TIMEOUT) -> None:
    deadline = time.monotonic() + timeout
    pending = dict(endpoints)
    while pending:
        for name in list(pending):
            proc = deployment.processes.get(name)
            if proc is not None and proc.poll() is not None:
                stderr = _tail(deployment.sandboxes[name] / "harness-stderr.log")
                raise UnitFailedToStart(
                    f"service '{name}' exited with status {proc.returncode}: {stderr}"
                )
            host, port = pending[name]
            try:
                with socket.create_connection((host, port), timeout=0.25):
                    del pending[name]
            except OSError:
                pass
        if pending and time.monotonic() > deadline:
            raise UnitFailedToStart(f"services not ready in {timeout:.0f}s: {sorted(pending)}")
        if pending:
            time.sleep(0.1)


def _tail(path: Path, limit: int = 2000) -> str:
    if not path.exists():
        return ""
    data = path.read_bytes()
    return data[-limit:].decode(errors="replace")


def _spawn(name: str, command: list[str] | str, sandbox: Path, env: dict[str, str],
           deployment: HarnessDeployment, shell: bool = False) -> None:
    stderr_path = sandbox / "harness-stderr.log"
    with stderr_path.open("ab") as err:
        proc = subprocess.Popen(
            command,
            cwd=str(sandbox),
            env={**os.environ, **env},
            stdin=subprocess.DEVNULL,
            stdout=err,
            stderr=err,
            shell=shell,
            start_new_session=True,
        )
    deployment.processes[name] = proc


def launch_local(
    compose: ComposeModel | dict,
    contexts_dir: str | Path,
    stubs: dict[str, str] | None = None,
    base_dir: str | Path | None = None,
    ready_timeout: float = READY_TIMEOUT,
) -> HarnessDeployment:
    """Interpret a Compose document as local processes.

    Ports are remapped to free local ones; the remapping is recorded in
    the deployment's alias table and handed to the manager.
    """
    document = compose.as_dict() if isinstance(compose, ComposeModel) else compose
    contexts_dir = Path(contexts_dir)
    stubs = stubs or {}

    root = Path(base_dir) if base_dir else Path(tempfile.mkdtemp(prefix="toskose-harness-"))
    root.mkdir(parents=True, exist_ok=True)
    deployment = HarnessDeployment(root=root)
    endpoints: dict[str, tuple[str, int]] = {}

    try:
        manager_name: str | None = None
        # classify by context shape: unit contexts carry a supervisord.conf,
        # the manager context carries the injected model documents
        for name, service in document["services"].items():
            context = contexts_dir / name
            if (context / "model").is_dir():
                manager_name = name

        for name, service in document["services"].items():
            alias = _service_alias(name, service)
            sandbox = root / name
            context = contexts_dir / name
            env = _service_env(service)
            port = _free_port()

            if (context / "supervisord.conf").exists():
                shutil.copytree(context, sandbox)
                env["SUPERVISORD_PORT"] = str(port)
                _spawn(
                    name,
                    [sys.executable, "-m", "toskose.unit", "-c", "supervisord.conf"],
                    sandbox,
                    env,
                    deployment,
                )
            elif name == manager_name:
                continue  # launched last, once the alias table is complete
            else:
                sandbox.mkdir(parents=True, exist_ok=True)
                env["STUB_PORT"] = str(port)
                command = stubs.get(name, DEFAULT_STUB_COMMAND)
                _spawn(name, command, sandbox, env, deployment, shell=True)
                deployment.stub_services.add(name)

            deployment.sandboxes[name] = sandbox
            deployment.alias_table[alias] = ("127.0.0.1", port)
            endpoints[name] = ("127.0.0.1", port)

        if manager_name is not None:
            service = document["services"][manager_name]
            alias = _service_alias(manager_name, service)
            sandbox = root / manager_name
            shutil.copytree(contexts_dir / manager_name, sandbox)
            port = _free_port()
            table_path = sandbox / "alias-table.json"
            table_path.write_text(
                json.dumps(
                    {a: f"{h}:{p}" for a, (h, p) in deployment.alias_table.items()}
                )
            )
            env = _service_env(service)
            env["TOSKOSE_MANAGER_PORT"] = str(port)
            env["TOSKOSE_MODEL_DIR"] = str(sandbox / "model")
            env["TOSKOSE_ALIAS_TABLE"] = str(table_path)
            _spawn(
                manager_name,
                [sys.executable, "-m", "toskose.manager"],
                sandbox,
                env,
                deployment,
            )
            deployment.sandboxes[manager_name] = sandbox
            deployment.alias_table[alias] = ("127.0.0.1", port)
            deployment.manager_service = alias
            endpoints[manager_name] = ("127.0.0.1", port)

        _wait_listening(endpoints, deployment, timeout=ready_timeout)
    except Exception:
        teardown(deployment)
        raise

    return deployment


def launch_from_artifact(
    artifact_dir: str | Path,
    stubs: dict[str, str] | None = None,
    base_dir: str | Path | None = None,
    ready_timeout: float = READY_TIMEOUT,
) -> HarnessDeployment:
    """Launch from a pipeline output directory (compose file + contexts)."""
    artifact_dir = Path(artifact_dir)
    document = yaml.safe_load((artifact_dir / "docker-compose.yml").read_text())
    manifest = artifact_dir / "harness.yml"
    if stubs is None and manifest.exists():
        stubs = (yaml.safe_load(manifest.read_text()) or {}).get("stubs") or {}
    return launch_local(
        document,
        artifact_dir / "contexts",
        stubs=stubs,
        base_dir=base_dir,
        ready_timeout=ready_timeout,
    )


def resolve_alias(deployment: HarnessDeployment, alias: str) -> str:
    host, port = deployment.endpoint(alias)
    return f"{host}:{port}"


def teardown(deployment: HarnessDeployment, grace: float = 10.0) -> None:
    """Stop every process (units get their shutdown semantics), remove
    sandboxes. Idempotent; leaves no stray children behind."""
    if deployment._torn_down:
        return
    for name, proc in reversed(list(deployment.processes.items())):
        if proc.poll() is None:
            try:
                os.killpg(proc.pid, signal.SIGTERM)
            except ProcessLookupError:
                pass
    deadline = time.monotonic() + grace + 5
    for name, proc in deployment.processes.items():
        remaining = max(deadline - time.monotonic(), 0.1)
        try:
            proc.wait(timeout=remaining)
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            proc.wait(timeout=5)
    shutil.rmtree(deployment.root, ignore_errors=True)
    deployment._torn_down = True
