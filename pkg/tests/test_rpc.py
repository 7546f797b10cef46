"""XML-RPC control surface of the unit: auth, dispatch, fault codes."""

import xmlrpc.client

import pytest

from toskose.unit.rpc import (
    FAULT_ALREADY_STARTED,
    FAULT_BAD_NAME,
    FAULT_NOT_RUNNING,
    UnitRpcServer,
)

from test_supervisor import make_supervisor

PROGRAMS = (
    "[program:long]\ncommand = sleep 60\nstartsecs = 0.1\n"
    "[program:oneshot]\ncommand = /bin/sh -c 'echo marker'\nstartsecs = 0.3\n"
)


@pytest.fixture
def server(tmp_path):
    supervisor = make_supervisor(tmp_path, PROGRAMS)
    rpc = UnitRpcServer(supervisor, host="127.0.0.1", port=0)
    rpc.serve_in_background()
    yield rpc
    rpc.close()
    supervisor.shutdown()


def _proxy(server, user="u", password="p"):
    host, port = server.address
    return xmlrpc.client.ServerProxy(f"http://{user}:{password}@{host}:{port}/RPC2")


def test_lifecycle_over_rpc(server):
    proxy = _proxy(server)
    info = proxy.supervisor.startProcess("long")
    assert info["state"] == "RUNNING"
    assert proxy.supervisor.getProcessInfo("long")["state"] == "RUNNING"
    assert proxy.supervisor.stopProcess("long")["state"] == "STOPPED"


def test_one_shot_and_log(server):
    proxy = _proxy(server)
    info = proxy.supervisor.startProcess("oneshot")
    assert info["state"] == "EXITED"
    assert info["exitstatus"] == 0
    log = proxy.supervisor.readProcessStdoutLog("oneshot", 0, 2**16)
    assert "marker" in log


def test_get_all_process_info(server):
    proxy = _proxy(server)
    names = [entry["name"] for entry in proxy.supervisor.getAllProcessInfo()]
    assert names == ["long", "oneshot"]


def test_list_methods(server):
    proxy = _proxy(server)
    methods = proxy.system.listMethods()
    assert "supervisor.startProcess" in methods
    assert "supervisor.readProcessStdoutLog" in methods


def test_fault_bad_name(server):
    proxy = _proxy(server)
    with pytest.raises(xmlrpc.client.Fault) as err:
        proxy.supervisor.getProcessInfo("ghost")
    assert err.value.faultCode == FAULT_BAD_NAME


def test_fault_already_started(server):
    proxy = _proxy(server)
    proxy.supervisor.startProcess("long")
    with pytest.raises(xmlrpc.client.Fault) as err:
        proxy.supervisor.startProcess("long")
    assert err.value.faultCode == FAULT_ALREADY_STARTED


def test_fault_not_running(server):
    proxy = _proxy(server)
    with pytest.raises(xmlrpc.client.Fault) as err:
        proxy.supervisor.stopProcess("long")
    assert err.value.faultCode == FAULT_NOT_RUNNING


def test_wrong_credentials_rejected(server):
    proxy = _proxy(server, password="wrong")
    with pytest.raises(xmlrpc.client.ProtocolError) as err:
        proxy.supervisor.getAllProcessInfo()
    assert err.value.errcode == 401


def test_missing_credentials_rejected(server):
    host, port = server.address
    proxy = xmlrpc.client.ServerProxy(f"http://{host}:{port}/RPC2")
    with pytest.raises(xmlrpc.client.ProtocolError) as err:
        proxy.supervisor.getAllProcessInfo()
    assert err.value.errcode == 401
