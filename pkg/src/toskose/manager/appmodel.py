"""The manager's read-only view of the application.

Built once at startup from the TOSCA template and the completed
configuration injected by the packager; invalid inputs are fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..config import (
    ToskoseConfig,
    complete_config,
    parse_config,
    validate_config,
)
from ..model import ServiceTemplate, classify_nodes, validate_topology
from ..template import parse_service_template


class AppModelError(Exception):
    pass


class ComponentState(Enum):
    NOT_CREATED = "NOT_CREATED"
    CREATED = "CREATED"
    CONFIGURED = "CONFIGURED"
    RUNNING = "RUNNING"
    STOPPED = "STOPPED"


@dataclass(frozen=True)
class UnitEndpoint:
    alias: str
    port: int
    user: str
    password: str


@dataclass
class ComponentEntry:
    container: str
    name: str
    operations: list[str]
    #: operations backed by an artifact, hence runnable as programs
    runnable: list[str]


@dataclass
class AppModel:
    template: ServiceTemplate
    config: ToskoseConfig
    endpoints: dict[str, UnitEndpoint] = field(default_factory=dict)
    components: dict[tuple[str, str], ComponentEntry] = field(default_factory=dict)
    standalone: list[str] = field(default_factory=list)

    def containers(self) -> list[str]:
        return sorted(set(self.endpoints) | set(self.standalone))

    def components_of(self, container: str) -> list[ComponentEntry]:
        return [e for (c, _), e in sorted(self.components.items()) if c == container]


def load_app_model(template_doc: str, config_doc: str) -> AppModel:
    """Build the model; any validation failure is fatal at startup."""
    template = parse_service_template(template_doc)
    report = validate_topology(template)
    if not report.ok:
        raise AppModelError(
            "invalid template: " + "; ".join(v.message for v in report.violations)
        )

    parsed = parse_config(config_doc)
    # validate before completion: completion keeps hosting entries only
    # and would silently drop an entry for a standalone container
    report = validate_config(parsed, template)
    if report.ok:
        config = complete_config(parsed, template)
        report = validate_config(config, template, require_complete=True)
    if not report.ok:
        raise AppModelError(
            "invalid configuration: " + "; ".join(v.message for v in report.violations)
        )

    classification = classify_nodes(template)
    model = AppModel(template=template, config=config, standalone=classification.standalone)

    for container, components in classification.hosting.items():
        node_cfg = config.nodes[container]
        model.endpoints[container] = UnitEndpoint(
            alias=str(node_cfg.alias),
            port=int(node_cfg.port),
            user=str(node_cfg.user),
            password=str(node_cfg.password),
        )
        for component in components:
            interface = template.nodes[component].interface
            model.components[(container, component)] = ComponentEntry(
                container=container,
                name=component,
                operations=list(interface.operations),
                runnable=[
                    name
                    for name, op in interface.operations.items()
                    if op.implementation is not None
                ],
            )
    return model
