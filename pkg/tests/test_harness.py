"""Local deployment harness: process launch, alias table, teardown."""

import socket
import urllib.request

import psutil
import pytest

from toskose.harness import (
    UnknownAlias,
    launch_from_artifact,
)


@pytest.fixture(scope="module")
def deployment(thinking_artifact):
    dep = launch_from_artifact(thinking_artifact)
    yield dep
    dep.teardown()


class TestLaunch:
    def test_one_process_per_service(self, deployment):
        assert set(deployment.processes) == {"maven", "node", "mongodb", "toskose-manager"}
        for name, proc in deployment.processes.items():
            assert proc.poll() is None, f"{name} died"

    def test_stub_for_standalone(self, deployment):
        assert deployment.stub_services == {"mongodb"}
        host, port = deployment.endpoint("mongodb")
        with socket.create_connection((host, port), timeout=2):
            pass

    def test_alias_resolution(self, deployment):
        host, port = deployment.endpoint("maven")
        assert host == "127.0.0.1"
        assert 0 < port < 65536

    def test_unknown_alias(self, deployment):
        with pytest.raises(UnknownAlias):
            deployment.endpoint("ghost")

    def test_ports_are_remapped_and_unique(self, deployment):
        ports = [port for _, port in deployment.alias_table.values()]
        assert len(set(ports)) == len(ports)

    def test_manager_answers_http(self, deployment):
        request = urllib.request.Request(deployment.manager_url() + "/api/v1/node")
        try:
            urllib.request.urlopen(request, timeout=10)
        except urllib.error.HTTPError as err:
            # production mode: unauthenticated calls are rejected, not dropped
            assert err.code == 401


class TestTeardown:
    def test_teardown_reaps_every_process(self, thinking_artifact):
        dep = launch_from_artifact(thinking_artifact)
        pids = [proc.pid for proc in dep.processes.values()]
        root = dep.root
        dep.teardown()
        for pid in pids:
            assert not psutil.pid_exists(pid) or psutil.Process(pid).status() == psutil.STATUS_ZOMBIE
        assert not root.exists()
        dep.teardown()  # idempotent
