"""Generation of the per-container unit configuration file.

The emitted INI carries, in order: the HTTP server settings (listener
and credentials taken from the container environment), the supervisor
settings, the RPC interface settings, and one program section per
(hosted component, lifecycle operation). Programs never autostart;
components are brought up on demand through the manager.
"""

from __future__ import annotations

import posixpath

from ..model import NodeTemplate
from .enrich import EnrichedModel


class NotAHostingContainer(Exception):
    pass


def program_name(component: str, operation: str) -> str:
    return f"{component}-{operation}"


def artifact_context_path(component: str, artifact_path: str) -> str:
    """Where an operation artifact lands inside the build context."""
    return f"{component}/{posixpath.basename(artifact_path)}"


def _program_section(component: str, operation: str, node: NodeTemplate) -> list[str]:
    op = node.interface.operations[operation]
    assert op.implementation is not None
    script = artifact_context_path(component, op.implementation.path)
    return [
        f"[program:{program_name(component, operation)}]",
        f"command = /bin/sh {script}",
        "autostart = false",
        "autorestart = false",
        "startsecs = 1",
        "exitcodes = 0",
        "",
    ]


def generate_supervisor_config(model: EnrichedModel, container: str) -> str:
    """Emit the unit configuration for one hosting container."""
    components = model.hosted_components(container)
    if not components:
        raise NotAHostingContainer(f"'{container}' hosts no software components")

    lines = [
        "; unit configuration, generated by toskose",
        "",
        "[inet_http_server]",
        "port = ${SUPERVISORD_PORT}",
        "username = ${SUPERVISORD_USER}",
        "password = ${SUPERVISORD_PASSWORD}",
        "",
        "[supervisord]",
        "loglevel = ${SUPERVISORD_LOG_LEVEL}",
        "logdir = logs",
        "",
        "[rpcinterface:supervisor]",
        "interface = toskose-unit",
        "",
    ]
    for component in components:
        node = model.template.nodes[component]
        for operation, op in node.interface.operations.items():
            if op.implementation is None:
                continue
            lines.extend(_program_section(component, operation, node))
    return "\n".join(lines)
