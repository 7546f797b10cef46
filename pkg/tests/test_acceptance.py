"""Acceptance suite: one test per top-level acceptance criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints one PASS/FAIL line per criterion.
"""

import json
import random
import signal
import subprocess
import sys
import time
import urllib.error
import urllib.request
from base64 import b64encode
from pathlib import Path

import psutil
import pytest
import yaml

from toskose.config import parse_config
from toskose.harness import launch_from_artifact
from toskose.packager.pipeline import PipelineError, run_pipeline
from toskose.packager.supervisord_conf import generate_supervisor_config
from toskose.unit.config import load_unit_config
from toskose.unit.rpc import UnitRpcInterface
from toskose.unit.supervisor import ProcessState

from conftest import THINKING_CONFIG
from test_supervisor import make_supervisor


def test_compose_fidelity(thinking_csar, tmp_path, golden_compose_text):
    """Pipeline output is structurally equal to the golden compose file."""
    started = time.monotonic()
    result = run_pipeline(thinking_csar, THINKING_CONFIG, output_dir=tmp_path / "out")
    elapsed = time.monotonic() - started

    produced = yaml.safe_load(result.compose_path.read_text())
    golden = yaml.safe_load(golden_compose_text)
    assert produced == golden

    services = produced["services"]
    assert len(services) == 4
    assert services["mongodb"]["image"] == "mongo:3.4"
    assert services["mongodb"]["volumes"] == ["dbvolume:/data/db"]
    for name, port, user, password, level in [
        ("maven", "9456", "user_21ty5", "1t5mYp4ss", "INFO"),
        ("node", "13450", "user_a4bc2", "p4ssw0rd", "DEBUG"),
    ]:
        assert services[name]["init"] is True
        env = dict(item.split("=", 1) for item in services[name]["environment"])
        assert env["SUPERVISORD_ALIAS"] == name
        assert env["SUPERVISORD_PORT"] == port
        assert env["SUPERVISORD_USER"] == user
        assert env["SUPERVISORD_PASSWORD"] == password
        assert env["SUPERVISORD_LOG_LEVEL"] == level
    manager_env = dict(
        item.split("=", 1) for item in services["toskose-manager"]["environment"]
    )
    assert manager_env == {
        "TOSKOSE_MANAGER_PORT": "12000",
        "TOSKOSE_APP_MODE": "production",
        "SECRET_KEY": "my_secret",
    }
    assert services["toskose-manager"]["ports"] == ["12000:12000/tcp"]
    assert produced["networks"]["toskose-network"] == {
        "driver": "overlay", "attachable": True,
    }
    assert elapsed < 5.0, f"pipeline took {elapsed:.1f}s"


def test_default_completion(thinking_csar, tmp_path):
    """Running without a configuration file applies the documented defaults."""
    result = run_pipeline(thinking_csar, output_dir=tmp_path / "out")
    config = result.model.config
    for container in ("maven", "node"):
        node = config.nodes[container]
        assert node.alias == container
        assert node.port == 9001
        assert node.user == "admin"
        assert node.password == "admin"
        assert node.log_level == "INFO"
        assert node.image_tag == "latest"
    manager = config.manager
    assert manager.alias == "toskose-manager"
    assert manager.port == 10000
    assert manager.user == "admin"
    assert manager.password == "admin"
    assert manager.mode == "production"
    assert manager.secret_key == "secret"
    assert manager.image_tag == "latest"


def _manager_call(base_url, method, path, timeout=30):
    auth = b64encode(b"admin_manager:password_manager").decode()
    request = urllib.request.Request(
        base_url + "/api/v1" + path,
        method=method,
        headers={"Authorization": "Basic " + auth},
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        body = response.read()
    try:
        return json.loads(body)
    except json.JSONDecodeError:
        return body.decode()


def test_end_to_end_lifecycle(thinking_artifact):
    """Full management sequence over HTTP against a local deployment."""
    started = time.monotonic()
    deployment = launch_from_artifact(thinking_artifact)
    try:
        url = deployment.manager_url()
        sequence = [
            ("maven", "api", "create"),
            ("maven", "api", "configure"),
            ("maven", "api", "push_default"),
            ("maven", "api", "start"),
            ("maven", "logsniffer", "create"),
            ("maven", "logsniffer", "start"),
            ("node", "gui", "create"),
            ("node", "gui", "configure"),
            ("node", "gui", "start"),
        ]
        for container, component, operation in sequence:
            result = _manager_call(url, "POST", f"/node/{container}/{component}/{operation}")
            assert result["outcome"] == "SUCCESS", result

        # stop one component; its sibling and both units must be untouched
        result = _manager_call(url, "POST", "/node/maven/api/stop")
        assert result["outcome"] == "SUCCESS"
        node = _manager_call(url, "GET", "/node/maven")
        states = {c["name"]: c["derived_state"] for c in node["components"]}
        assert states["api"] == "STOPPED"
        assert states["logsniffer"] == "RUNNING"
        assert node["unit_alive"] is True
        assert _manager_call(url, "GET", "/node/node")["unit_alive"] is True
        for name in ("maven", "node"):
            assert deployment.processes[name].poll() is None, f"unit {name} died"

        result = _manager_call(url, "POST", "/node/maven/api/start")
        assert result["outcome"] == "SUCCESS"
        assert result["final_program_state"] == "RUNNING"
    finally:
        deployment.teardown()
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"lifecycle took {elapsed:.1f}s"


LEGAL_TRANSITIONS = {
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


def test_unit_state_machine(tmp_path):
    """Randomized control sequences never produce an illegal transition
    or leave a defunct child behind."""
    transitions = []
    programs = (
        "[program:steady]\ncommand = sleep 300\nstartsecs = 0\n"
        "[program:oneshot]\ncommand = /bin/sh -c 'exit 0'\nstartsecs = 0\n"
        "[program:flaky]\ncommand = /bin/sh -c 'exit 3'\nstartsecs = 0.05\n"
    )
    supervisor = make_supervisor(
        tmp_path, programs, grace=1.0,
        on_transition=lambda name, old, new: transitions.append((name, old, new)),
    )
    rpc = UnitRpcInterface(supervisor)
    rng = random.Random(20260826)
    names = ["steady", "oneshot", "flaky", "ghost"]
    methods = [
        "supervisor.startProcess",
        "supervisor.stopProcess",
        "supervisor.getProcessInfo",
    ]
    me = psutil.Process()
    try:
        for sequence in range(1000):
            for _ in range(rng.randint(1, 4)):
                method = rng.choice(methods)
                name = rng.choice(names)
                try:
                    rpc._dispatch(method, (name, True))
                except Exception:
                    pass  # faults are part of the contract; transitions are not
            # a child may die at any moment; one reaping pass after the
            # death is observed must always collect it
            zombies = [c for c in me.children() if c.status() == psutil.STATUS_ZOMBIE]
            if zombies:
                supervisor.reap_children()
                leftover = [
                    c for c in me.children() if c.status() == psutil.STATUS_ZOMBIE
                ]
                assert not leftover, f"defunct children after sequence {sequence}"
    finally:
        supervisor.shutdown(signal.SIGKILL)
    illegal = [t for t in transitions if (t[1], t[2]) not in LEGAL_TRANSITIONS]
    assert not illegal, f"illegal transitions observed: {illegal[:5]}"
    assert transitions, "no transitions exercised"


def test_signal_contract(tmp_path):
    """SIGTERM to a unit reaches every running program and the unit
    exits cleanly within grace + 5 s."""
    grace = 2.0
    for name in ("a", "b"):
        (tmp_path / f"{name}.sh").write_text(
            f"#!/bin/sh\ntrap 'echo terminated > {name}.marker; exit 0' TERM\n"
            "while :; do sleep 0.2; done\n"
        )
    (tmp_path / "supervisord.conf").write_text(
        "[inet_http_server]\nport = 0\nusername = u\npassword = p\n"
        f"[supervisord]\ngrace_period = {grace}\n"
        "[program:a]\ncommand = /bin/sh a.sh\nautostart = true\nstartsecs = 0.2\n"
        "[program:b]\ncommand = /bin/sh b.sh\nautostart = true\nstartsecs = 0.2\n"
    )
    unit = subprocess.Popen(
        [sys.executable, "-m", "toskose.unit", "-c", "supervisord.conf"],
        cwd=tmp_path,
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            if (tmp_path / "logs" / "b" / "stdout.log").exists():
                break
            time.sleep(0.1)
        time.sleep(0.5)  # both programs are up and past startsecs

        unit.send_signal(signal.SIGTERM)
        exited = time.monotonic()
        status = unit.wait(timeout=grace + 5)
        elapsed = time.monotonic() - exited
        assert status == 0, f"unit exited with {status}"
        assert elapsed <= grace + 5
        for name in ("a", "b"):
            marker = tmp_path / f"{name}.marker"
            assert marker.exists(), f"program {name} never saw the signal"
            assert marker.read_text().strip() == "terminated"
    finally:
        if unit.poll() is None:
            unit.kill()
            unit.wait()


def test_validation_gates(thinking_csar, tmp_path):
    """Malformed inputs are rejected up front, before anything is written."""
    import zipfile

    # (a) wrong archive extension
    bad_archive = tmp_path / "thinking.tar"
    bad_archive.write_bytes(b"not an archive")
    out_a = tmp_path / "out-a"
    with pytest.raises(PipelineError) as err:
        run_pipeline(bad_archive, output_dir=out_a)
    assert err.value.stage == "archive"
    assert "extension" in str(err.value).lower()

    # (b) software node with no host
    broken = tmp_path / "broken.csar"
    template = yaml.safe_dump({
        "topology_template": {"node_templates": {
            "lonely": {"type": "tosker.nodes.Software"},
        }}
    })
    with zipfile.ZipFile(broken, "w") as z:
        z.writestr("TOSCA-Metadata/TOSCA.meta", "Entry-Definitions: t.yaml\n")
        z.writestr("t.yaml", template)
    out_b = tmp_path / "out-b"
    with pytest.raises(PipelineError) as err:
        run_pipeline(broken, output_dir=out_b)
    assert "software-without-host" in err.value.report.codes()

    # (c) configuration entry for a standalone container
    bad_config = tmp_path / "toskose.yml"
    bad_config.write_text("nodes:\n  mongodb:\n    port: 9001\n")
    out_c = tmp_path / "out-c"
    with pytest.raises(PipelineError) as err:
        run_pipeline(thinking_csar, bad_config, output_dir=out_c)
    assert "config-for-standalone" in err.value.report.codes()

    for out in (out_a, out_b, out_c):
        assert not out.exists() or not any(out.iterdir()), f"artifacts written to {out}"


def test_generated_config_round_trip(thinking_csar, tmp_path):
    """Every generated supervisor config reparses to exactly the expected
    program set: hosted components times their operations."""
    result = run_pipeline(thinking_csar, THINKING_CONFIG, output_dir=tmp_path / "out")
    model = result.model
    env = {
        "SUPERVISORD_PORT": "9001",
        "SUPERVISORD_USER": "u",
        "SUPERVISORD_PASSWORD": "p",
        "SUPERVISORD_LOG_LEVEL": "INFO",
    }
    checked = 0
    for container, components in model.classification.hosting.items():
        text = generate_supervisor_config(model, container)
        parsed = load_unit_config(text, env=env)
        expected = {
            f"{component}-{operation}"
            for component in components
            for operation in model.template.nodes[component].interface.operations
        }
        assert set(parsed.programs) == expected
        checked += 1
    assert checked == 2
