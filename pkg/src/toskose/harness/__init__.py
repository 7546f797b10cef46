"""Desk-scale stand-in for a container orchestrator.

Interprets a Compose document by launching units and the manager as
local processes in sandbox directories; an alias table replaces the
overlay network DNS, and standalone containers are replaced by stub
commands.
"""

from .deploy import (
    HarnessDeployment,
    PortExhausted,
    UnknownAlias,
    UnitFailedToStart,
    launch_from_artifact,
    launch_local,
    resolve_alias,
    teardown,
)

__all__ = [
    "HarnessDeployment",
    "PortExhausted",
    "UnknownAlias",
    "UnitFailedToStart",
    "launch_from_artifact",
    "launch_local",
    "resolve_alias",
    "teardown",
]
