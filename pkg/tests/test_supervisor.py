"""Process supervision: state machine, signals, reaping, logs."""

import os
import signal
import time

import psutil
import pytest

from toskose.unit.config import load_unit_config
from toskose.unit.supervisor import (
    AlreadyStarted,
    NoSuchProgram,
    NotRunning,
    ProcessState,
    SpawnFailed,
    Supervisor,
)

HEADER = """
[inet_http_server]
port = 9001
username = u
password = p

[supervisord]
grace_period = {grace}
"""


def make_supervisor(tmp_path, programs: str, grace: float = 1.0, **kwargs) -> Supervisor:
    config = load_unit_config(HEADER.format(grace=grace) + programs, env={})
    return Supervisor(config, root_dir=tmp_path, base_env={}, **kwargs)


def wait_for(supervisor, name, state, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if supervisor.get_process_info(name).state is state:
            return
        time.sleep(0.02)
    raise AssertionError(
        f"{name} never reached {state}, stuck at {supervisor.get_process_info(name).state}"
    )


@pytest.fixture
def sup(tmp_path):
    holder = []

    def build(programs, **kwargs):
        supervisor = make_supervisor(tmp_path, programs, **kwargs)
        holder.append(supervisor)
        return supervisor

    yield build
    for supervisor in holder:
        supervisor.shutdown(signal.SIGKILL)


class TestStateMachine:
    def test_survives_startsecs_to_running(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\nstartsecs = 0.2\n")
        info = s.start_program("x")
        assert info.state is ProcessState.RUNNING
        assert info.pid is not None

    def test_clean_fast_exit_is_exited(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'exit 0'\nstartsecs = 2\n")
        info = s.start_program("x")
        assert info.state is ProcessState.EXITED
        assert info.exitstatus == 0

    def test_bad_fast_exit_is_fatal(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'exit 3'\nstartsecs = 2\n")
        info = s.start_program("x")
        assert info.state is ProcessState.FATAL

    def test_nonzero_allowed_exitcode_is_exited(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'exit 2'\nstartsecs = 2\nexitcodes = 0,2\n")
        info = s.start_program("x")
        assert info.state is ProcessState.EXITED
        assert info.exitstatus == 2

    def test_zero_startsecs_is_immediately_running(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\nstartsecs = 0\n")
        assert s.start_program("x").state is ProcessState.RUNNING

    def test_running_then_exit_is_exited(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'sleep 0.5'\nstartsecs = 0.1\n")
        assert s.start_program("x").state is ProcessState.RUNNING
        wait_for(s, "x", ProcessState.EXITED)

    def test_signal_death_records_negative_status(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\nstartsecs = 0.1\n")
        info = s.start_program("x")
        os.kill(info.pid, signal.SIGKILL)
        wait_for(s, "x", ProcessState.EXITED)
        assert s.get_process_info("x").exitstatus == -signal.SIGKILL

    def test_restart_after_exit(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'exit 0'\nstartsecs = 1\n")
        assert s.start_program("x").state is ProcessState.EXITED
        assert s.start_program("x").state is ProcessState.EXITED


class TestErrors:
    def test_no_such_program(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\n")
        with pytest.raises(NoSuchProgram):
            s.start_program("ghost")
        with pytest.raises(NoSuchProgram):
            s.get_process_info("ghost")

    def test_already_started(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\nstartsecs = 0\n")
        s.start_program("x")
        with pytest.raises(AlreadyStarted):
            s.start_program("x")

    def test_not_running(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\n")
        with pytest.raises(NotRunning):
            s.stop_program("x")

    def test_spawn_failed(self, sup):
        s = sup("[program:x]\ncommand = /no/such/binary\nstartsecs = 0\n")
        with pytest.raises(SpawnFailed):
            s.start_program("x")
        assert s.get_process_info("x").state is ProcessState.FATAL


class TestStopAndSignals:
    def test_stop_terminates_cleanly(self, sup):
        s = sup("[program:x]\ncommand = sleep 60\nstartsecs = 0.1\n")
        s.start_program("x")
        info = s.stop_program("x")
        assert info.state is ProcessState.STOPPED

    def test_sigterm_escalates_to_sigkill_after_grace(self, sup):
        grace = 0.5
        s = sup(
            "[program:x]\ncommand = /bin/sh -c 'trap \"\" TERM; sleep 60'\nstartsecs = 0.1\n",
            grace=grace,
        )
        s.start_program("x")
        started = time.monotonic()
        info = s.stop_program("x")
        elapsed = time.monotonic() - started
        assert info.state is ProcessState.STOPPED
        assert grace <= elapsed < grace + 5

    def test_stop_kills_whole_process_group(self, sup):
        s = sup(
            "[program:x]\ncommand = /bin/sh -c 'sleep 60 & sleep 60'\nstartsecs = 0.1\n"
        )
        info = s.start_program("x")
        group = os.getpgid(info.pid)
        s.stop_program("x")
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline:
            alive = [
                p for p in psutil.process_iter(["pid"])
                if _pgid(p.pid) == group
            ]
            if not alive:
                break
            time.sleep(0.05)
        assert not alive

    def test_shutdown_stops_running_programs_and_is_idempotent(self, sup):
        s = sup(
            "[program:a]\ncommand = sleep 60\nstartsecs = 0\n"
            "[program:b]\ncommand = sleep 60\nstartsecs = 0\n"
        )
        s.start_program("a")
        s.start_program("b")
        s.shutdown()
        assert s.closed
        for name in ("a", "b"):
            assert s.get_process_info(name).state is ProcessState.STOPPED
        s.shutdown()  # second call is a no-op


def _pgid(pid):
    try:
        return os.getpgid(pid)
    except (ProcessLookupError, PermissionError):
        return None


class TestReaping:
    def test_no_zombies_after_exit(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'exit 0'\nstartsecs = 1\n")
        s.start_program("x")
        s.reap_children()
        me = psutil.Process()
        zombies = [c for c in me.children() if c.status() == psutil.STATUS_ZOMBIE]
        assert zombies == []

    def test_many_one_shots_leave_no_zombies(self, sup):
        programs = "".join(
            f"[program:p{i}]\ncommand = /bin/sh -c 'exit 0'\nstartsecs = 0.3\n"
            for i in range(5)
        )
        s = sup(programs)
        for i in range(5):
            s.start_program(f"p{i}")
        s.reap_children()
        me = psutil.Process()
        zombies = [c for c in me.children() if c.status() == psutil.STATUS_ZOMBIE]
        assert zombies == []


class TestLogs:
    def test_read_stdout_log_matches_file(self, sup, tmp_path):
        s = sup("[program:x]\ncommand = /bin/sh -c 'echo hello world'\nstartsecs = 0.2\n")
        s.start_program("x")
        content = s.read_stdout_log("x")
        # oracle: the log file itself
        on_disk = (tmp_path / "logs" / "x" / "stdout.log").read_text()
        assert content == on_disk
        assert "hello world" in content

    def test_offset_and_length(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'echo 0123456789'\nstartsecs = 0.2\n")
        s.start_program("x")
        full = s.read_stdout_log("x")
        assert s.read_stdout_log("x", offset=2, length=4) == full[2:6]

    def test_log_accumulates_across_restarts(self, sup):
        s = sup("[program:x]\ncommand = /bin/sh -c 'echo run'\nstartsecs = 0.5\n")
        s.start_program("x")
        s.start_program("x")
        assert s.read_stdout_log("x").count("run") == 2


class TestTransitions:
    LEGAL = {
        (ProcessState.STOPPED, ProcessState.STARTING),
        (ProcessState.STARTING, ProcessState.RUNNING),
        (ProcessState.STARTING, ProcessState.EXITED),
        (ProcessState.STARTING, ProcessState.FATAL),
        (ProcessState.STARTING, ProcessState.STOPPING),
        (ProcessState.RUNNING, ProcessState.STOPPING),
        (ProcessState.RUNNING, ProcessState.EXITED),
        (ProcessState.STOPPING, ProcessState.STOPPED),
        (ProcessState.EXITED, ProcessState.STARTING),
        (ProcessState.FATAL, ProcessState.STARTING),
    }

    def test_observed_transitions_are_legal(self, sup):
        seen = []
        s = sup(
            "[program:x]\ncommand = /bin/sh -c 'sleep 0.2'\nstartsecs = 0.05\n",
            on_transition=lambda name, old, new: seen.append((old, new)),
        )
        s.start_program("x")
        wait_for(s, "x", ProcessState.EXITED)
        s.start_program("x")
        s.stop_program("x")
        assert seen, "no transitions recorded"
        assert set(seen) <= self.LEGAL
