"""Clients for talking to units.

Client construction hides behind a factory keyed by protocol tag;
the only implementation today speaks the Supervisor-compatible
XML-RPC dialect over HTTP Basic auth.
"""

from __future__ import annotations

import http.client
import socket
import xmlrpc.client
from typing import Protocol


class UnitClientError(Exception):
    pass


class UnitUnreachable(UnitClientError):
    pass


class UnitClient(Protocol):
    def start_process(self, name: str, wait: bool = True) -> dict: ...

    def stop_process(self, name: str, wait: bool = True) -> dict: ...

    def get_process_info(self, name: str) -> dict: ...

    def get_all_process_info(self) -> list[dict]: ...

    def read_stdout_log(self, name: str, offset: int, length: int) -> str: ...

    def list_methods(self) -> list[str]: ...


class _TimeoutTransport(xmlrpc.client.Transport):
    def __init__(self, timeout: float):
        super().__init__()
        self._timeout = timeout

    def make_connection(self, host):
        connection = super().make_connection(host)
        connection.timeout = self._timeout
        return connection


class XmlRpcUnitClient:
    """XML-RPC client for a unit's ``/RPC2`` endpoint."""

    def __init__(self, host: str, port: int, user: str, password: str, timeout: float = 3.0):
        self._proxy = xmlrpc.client.ServerProxy(
            f"http://{user}:{password}@{host}:{port}/RPC2",
            transport=_TimeoutTransport(timeout),
            allow_none=False,
        )

    def _call(self, method, *args):
        try:
            return method(*args)
        except (ConnectionError, socket.timeout, socket.gaierror,
                http.client.HTTPException, OSError) as exc:
            raise UnitUnreachable(str(exc)) from exc

    def start_process(self, name: str, wait: bool = True) -> dict:
        return self._call(self._proxy.supervisor.startProcess, name, wait)

    def stop_process(self, name: str, wait: bool = True) -> dict:
        return self._call(self._proxy.supervisor.stopProcess, name, wait)

    def get_process_info(self, name: str) -> dict:
        return self._call(self._proxy.supervisor.getProcessInfo, name)

    def get_all_process_info(self) -> list[dict]:
        return self._call(self._proxy.supervisor.getAllProcessInfo)

    def read_stdout_log(self, name: str, offset: int, length: int) -> str:
        return self._call(self._proxy.supervisor.readProcessStdoutLog, name, offset, length)

    def list_methods(self) -> list[str]:
        return self._call(self._proxy.system.listMethods)


_PROTOCOLS = {"xmlrpc": XmlRpcUnitClient}


def make_client(
    host: str,
    port: int,
    user: str,
    password: str,
    protocol: str = "xmlrpc",
    timeout: float = 3.0,
) -> UnitClient:
    try:
        factory = _PROTOCOLS[protocol]
    except KeyError:
        raise UnitClientError(f"unknown unit protocol '{protocol}'") from None
    return factory(host, port, user, password, timeout=timeout)
