"""Process supervision for a single container.

One monitor thread owns all program state: it reaps terminated
children (including re-parented orphans when the unit is PID 1 or a
child subreaper), promotes programs that stayed up long enough to
RUNNING, and escalates termination to SIGKILL after the grace period.
Callers from any thread mutate state through methods that serialize on
the internal condition lock.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import errno
import logging
import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

from .config import ProgramSpec, UnitConfig

log = logging.getLogger(__name__)


class SupervisorError(Exception):
    pass


class NoSuchProgram(SupervisorError):
    pass


class AlreadyStarted(SupervisorError):
    pass


class NotRunning(SupervisorError):
    pass


class SpawnFailed(SupervisorError):
    pass


class ProcessState(Enum):
    STOPPED = "STOPPED"
    STARTING = "STARTING"
    RUNNING = "RUNNING"
    STOPPING = "STOPPING"
    EXITED = "EXITED"
    FATAL = "FATAL"


_STARTABLE = {ProcessState.STOPPED, ProcessState.EXITED, ProcessState.FATAL}
_STOPPABLE = {ProcessState.STARTING, ProcessState.RUNNING}
_ALIVE = {ProcessState.STARTING, ProcessState.RUNNING, ProcessState.STOPPING}


@dataclass(frozen=True)
class ProcessInfo:
    name: str
    state: ProcessState
    pid: int | None = None
    exitstatus: int | None = None
    start_time: float | None = None
    stop_time: float | None = None
    description: str = ""

    def as_dict(self) -> dict:
        # XML-RPC structs cannot carry None values
        info: dict = {"name": self.name, "state": self.state.value, "description": self.description}
        if self.pid is not None:
            info["pid"] = self.pid
        if self.exitstatus is not None:
            info["exitstatus"] = self.exitstatus
        if self.start_time is not None:
            info["start_time"] = self.start_time
        if self.stop_time is not None:
            info["stop_time"] = self.stop_time
        return info


class _Program:
    def __init__(self, spec: ProgramSpec):
        self.spec = spec
        self.state = ProcessState.STOPPED
        self.pid: int | None = None
        self.proc: subprocess.Popen | None = None
        self.exitstatus: int | None = None
        self.start_time: float | None = None
        self.stop_time: float | None = None
        self.stop_deadline: float | None = None
        self.kill_sent = False
        self.description = "not started"


def enable_child_subreaper() -> bool:
    """Ask the kernel to re-parent orphaned descendants to this process."""
    PR_SET_CHILD_SUBREAPER = 36
    libc_name = ctypes.util.find_library("c")
    if libc_name is None:
        return False
    try:
        libc = ctypes.CDLL(libc_name, use_errno=True)
        return libc.prctl(PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0) == 0
    except OSError:
        return False


class Supervisor:
    """Owns the configured programs and their child processes."""

    def __init__(
        self,
        config: UnitConfig,
        root_dir: str | Path = ".",
        base_env: dict[str, str] | None = None,
        poll_interval: float = 0.05,
        on_transition: Callable[[str, ProcessState, ProcessState], None] | None = None,
    ):
        self.config = config
        self.root_dir = Path(root_dir).resolve()
        self.grace_period = config.supervisor.grace_period
        self.base_env = dict(os.environ) if base_env is None else dict(base_env)
        self._poll_interval = poll_interval
        self._on_transition = on_transition
        self._cond = threading.Condition()
        self._programs = {name: _Program(spec) for name, spec in config.programs.items()}
        self._pid_table: dict[int, str] = {}
        self._closed = False
        self._monitor = threading.Thread(target=self._monitor_loop, daemon=True, name="unit-monitor")
        self._monitor.start()

    # -- state transitions (caller holds self._cond) --------------------

    def _set_state(self, prog: _Program, new: ProcessState, description: str | None = None) -> None:
        old = prog.state
        if old is new:
            return
        prog.state = new
        if description is not None:
            prog.description = description
        if self._on_transition is not None:
            self._on_transition(prog.spec.name, old, new)
        self._cond.notify_all()

    # -- public API ------------------------------------------------------

    def program_names(self) -> list[str]:
        return sorted(self._programs)

    def start_program(self, name: str, wait: bool = True) -> ProcessInfo:
        with self._cond:
            prog = self._get(name)
            if prog.state not in _STARTABLE:
                raise AlreadyStarted(f"program '{name}' is {prog.state.value}")
            self._spawn(prog)
            if wait:
                self._cond.wait_for(
                    lambda: prog.state is not ProcessState.STARTING,
                    timeout=max(prog.spec.startsecs, 0.1) + 30,
                )
            return self._info(prog)

    def stop_program(self, name: str, wait: bool = True) -> ProcessInfo:
        with self._cond:
            prog = self._get(name)
            if prog.state not in _STOPPABLE:
                raise NotRunning(f"program '{name}' is {prog.state.value}")
            self._begin_stop(prog)
            if wait:
                self._cond.wait_for(
                    lambda: prog.state not in _ALIVE,
                    timeout=self.grace_period + 10,
                )
            return self._info(prog)

    def get_process_info(self, name: str) -> ProcessInfo:
        with self._cond:
            return self._info(self._get(name))

    def get_all_process_info(self) -> list[ProcessInfo]:
        with self._cond:
            return [self._info(self._programs[name]) for name in sorted(self._programs)]

    def read_stdout_log(self, name: str, offset: int = 0, length: int = 2**16) -> str:
        with self._cond:
            prog = self._get(name)
            path = self._stdout_path(prog.spec)
        if length <= 0 or not path.exists():
            return ""
        with path.open("rb") as handle:
            handle.seek(offset)
            return handle.read(length).decode(errors="replace")

    def reap_children(self) -> int:
        """One explicit reaping pass; returns the number of children waited on."""
        with self._cond:
            return self._reap_pass()

    def shutdown(self, sig: int = signal.SIGTERM) -> None:
        """Stop every live program (grace semantics) and the monitor.

        Idempotent; bounded by the grace period plus a kill margin.
        """
        with self._cond:
            if self._closed:
                return
            for prog in self._programs.values():
                if prog.state in _STOPPABLE:
                    self._begin_stop(prog, sig=sig)
            deadline = time.monotonic() + self.grace_period + 5
            self._cond.wait_for(
                lambda: all(p.state not in _ALIVE for p in self._programs.values()),
                timeout=max(deadline - time.monotonic(), 0),
            )
            # anything still alive gets the kill signal before we leave
            for prog in self._programs.values():
                if prog.state in _ALIVE and prog.pid is not None:
                    self._signal_group(prog.pid, signal.SIGKILL)
            self._reap_pass()
            for prog in self._programs.values():
                if prog.state in _ALIVE:
                    self._set_state(prog, ProcessState.STOPPED, "killed at shutdown")
                    prog.pid = None
            self._closed = True
            self._cond.notify_all()
        self._monitor.join(timeout=5)

    @property
    def closed(self) -> bool:
        return self._closed

    # -- internals ---------------------------------------------------------

    def _get(self, name: str) -> _Program:
        try:
            return self._programs[name]
        except KeyError:
            raise NoSuchProgram(f"no program named '{name}'") from None

    def _info(self, prog: _Program) -> ProcessInfo:
        return ProcessInfo(
            name=prog.spec.name,
            state=prog.state,
            pid=prog.pid if prog.state in _ALIVE else None,
            exitstatus=prog.exitstatus if prog.state is ProcessState.EXITED else None,
            start_time=prog.start_time,
            stop_time=prog.stop_time,
            description=prog.description,
        )

    def _stdout_path(self, spec: ProgramSpec) -> Path:
        if spec.stdout_log:
            return self.root_dir / spec.stdout_log
        return self.root_dir / self.config.supervisor.log_path / spec.name / "stdout.log"

    def _stderr_path(self, spec: ProgramSpec) -> Path:
        if spec.stderr_log:
            return self.root_dir / spec.stderr_log
        return self.root_dir / self.config.supervisor.log_path / spec.name / "stderr.log"

    def _spawn(self, prog: _Program) -> None:
        spec = prog.spec
        stdout_path = self._stdout_path(spec)
        stderr_path = self._stderr_path(spec)
        stdout_path.parent.mkdir(parents=True, exist_ok=True)
        stderr_path.parent.mkdir(parents=True, exist_ok=True)
        env = dict(self.base_env)
        env.update(spec.environment)
        cwd = self.root_dir / spec.directory if spec.directory else self.root_dir
        prog.exitstatus = None
        prog.stop_deadline = None
        prog.kill_sent = False
        try:
            with stdout_path.open("ab") as out, stderr_path.open("ab") as err:
                # own process group so grace/kill escalation reaches descendants
                prog.proc = subprocess.Popen(
                    spec.command,
                    cwd=str(cwd),
                    env=env,
                    stdin=subprocess.DEVNULL,
                    stdout=out,
                    stderr=err,
                    start_new_session=True,
                )
        except OSError as exc:
            prog.pid = None
            self._set_state(prog, ProcessState.FATAL, f"spawn failed: {exc}")
            raise SpawnFailed(f"cannot spawn program '{spec.name}': {exc}") from exc
        prog.pid = prog.proc.pid
        prog.start_time = time.time()
        prog.stop_time = None
        self._pid_table[prog.pid] = spec.name
        self._set_state(prog, ProcessState.STARTING, f"pid {prog.pid}")
        if spec.startsecs == 0:
            self._set_state(prog, ProcessState.RUNNING, f"pid {prog.pid}")

    def _begin_stop(self, prog: _Program, sig: int = signal.SIGTERM) -> None:
        assert prog.pid is not None
        self._signal_group(prog.pid, sig)
        prog.stop_deadline = time.monotonic() + self.grace_period
        prog.kill_sent = False
        self._set_state(prog, ProcessState.STOPPING, "termination signal sent")

    @staticmethod
    def _signal_group(pid: int, sig: int) -> None:
        try:
            os.killpg(pid, sig)
        except ProcessLookupError:
            pass
        except PermissionError:
            # fall back to the direct child
            try:
                os.kill(pid, sig)
            except ProcessLookupError:
                pass

    def _reap_pass(self) -> int:
        count = 0
        while True:
            try:
                pid, status = os.waitpid(-1, os.WNOHANG)
            except ChildProcessError:
                break
            except OSError as exc:
                if exc.errno == errno.EINTR:
                    continue
                break
            if pid == 0:
                break
            count += 1
            self._handle_exit(pid, status)
        return count

    def _handle_exit(self, pid: int, status: int) -> None:
        name = self._pid_table.pop(pid, None)
        if name is None:
            log.info("reaped unknown child pid=%d status=%d", pid, status)
            return
        prog = self._programs[name]
        if prog.pid != pid:
            return
        if prog.proc is not None:
            prog.proc.returncode = 0  # silence Popen.__del__; we already reaped
            prog.proc = None
        if os.WIFEXITED(status):
            code: int | None = os.WEXITSTATUS(status)
        else:
            code = None
        prog.stop_time = time.time()
        if prog.state is ProcessState.STOPPING:
            prog.pid = None
            self._set_state(prog, ProcessState.STOPPED, "stopped")
        elif prog.state is ProcessState.STARTING:
            prog.pid = None
            if code is not None and code in prog.spec.exitcodes:
                prog.exitstatus = code
                self._set_state(prog, ProcessState.EXITED, f"exited with status {code}")
            else:
                self._set_state(
                    prog,
                    ProcessState.FATAL,
                    "terminated by signal" if code is None else f"exited early with status {code}",
                )
        else:  # RUNNING
            prog.pid = None
            if code is not None:
                prog.exitstatus = code
                self._set_state(prog, ProcessState.EXITED, f"exited with status {code}")
            else:
                # signal deaths surface as the conventional negative code
                prog.exitstatus = -os.WTERMSIG(status)
                self._set_state(prog, ProcessState.EXITED, f"terminated by signal {os.WTERMSIG(status)}")

    def _monitor_loop(self) -> None:
        while True:
            with self._cond:
                if self._closed:
                    return
                self._reap_pass()
                now = time.monotonic()
                for prog in self._programs.values():
                    if (
                        prog.state is ProcessState.STARTING
                        and prog.start_time is not None
                        and time.time() - prog.start_time >= prog.spec.startsecs
                    ):
                        self._set_state(prog, ProcessState.RUNNING, f"pid {prog.pid}")
                    elif (
                        prog.state is ProcessState.STOPPING
                        and prog.stop_deadline is not None
                        and not prog.kill_sent
                        and now >= prog.stop_deadline
                    ):
                        if prog.pid is not None:
                            self._signal_group(prog.pid, signal.SIGKILL)
                        prog.kill_sent = True
            time.sleep(self._poll_interval)
