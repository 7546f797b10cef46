"""Compose document generation.

Services appear in template declaration order with the manager last;
each service joins the application overlay network under its alias.
Serialization is deterministic so two runs produce byte-identical
documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from ..model import NodeKind, RelKind
from .enrich import EnrichedModel

COMPOSE_VERSION = "3.7"
NETWORK_NAME = "toskose-network"


@dataclass
class ServiceSpec:
    name: str
    image: str
    init: bool = False
    aliases: list[str] = field(default_factory=list)
    environment: list[str] = field(default_factory=list)
    ports: list[str] = field(default_factory=list)
    volumes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        entry: dict = {"image": self.image}
        if self.init:
            entry["init"] = True
        entry["networks"] = {NETWORK_NAME: {"aliases": list(self.aliases)}}
        if self.volumes:
            entry["volumes"] = list(self.volumes)
        if self.environment:
            entry["environment"] = list(self.environment)
        if self.ports:
            entry["ports"] = list(self.ports)
        return entry


@dataclass
class ComposeModel:
    version: str = COMPOSE_VERSION
    services: dict[str, ServiceSpec] = field(default_factory=dict)
    volumes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        document: dict = {
            "version": self.version,
            "services": {name: spec.as_dict() for name, spec in self.services.items()},
            "networks": {
                NETWORK_NAME: {"driver": "overlay", "attachable": True}
            },
        }
        if self.volumes:
            document["volumes"] = {name: None for name in self.volumes}
        return document

    def to_yaml(self) -> str:
        return "---\n" + yaml.safe_dump(self.as_dict(), sort_keys=False)


def _port_mappings(properties: dict) -> list[str]:
    ports = properties.get("ports") or {}
    return [
        f"{host}:{container}/tcp"
        for host, container in sorted(ports.items(), key=lambda item: str(item[0]))
    ]


def _bind_mounts(properties: dict) -> list[str]:
    share = properties.get("share_data") or {}
    return [f"{host}:{container}" for host, container in sorted(share.items())]


def generate_compose(model: EnrichedModel) -> ComposeModel:
    """Translate the enriched model into the deployment artifact."""
    template = model.template
    compose = ComposeModel()
    used_volumes: list[str] = []

    for node in template.nodes.values():
        if node.kind is not NodeKind.CONTAINER:
            continue
        plan = model.image_plan[node.name]
        env = model.environment.get(node.name, {})
        alias = (
            model.config.nodes[node.name].alias
            if node.name in model.classification.hosting
            else node.name
        )
        volumes = [
            f"{rel.target}:{rel.location}"
            for rel in template.outgoing(node.name, RelKind.ATTACHES_TO)
        ]
        for rel in template.outgoing(node.name, RelKind.ATTACHES_TO):
            if rel.target not in used_volumes:
                used_volumes.append(rel.target)
        volumes.extend(_bind_mounts(node.properties))
        compose.services[node.name] = ServiceSpec(
            name=node.name,
            image=plan.target_image,
            init=plan.toskosed,
            aliases=[str(alias)],
            environment=[f"{key}={value}" for key, value in env.items()],
            ports=_port_mappings(node.properties),
            volumes=volumes,
        )

    manager = model.config.manager
    compose.services[model.manager_name] = ServiceSpec(
        name=model.manager_name,
        image=model.image_plan[model.manager_name].target_image,
        init=True,
        aliases=[str(manager.alias)],
        environment=[
            f"{key}={value}" for key, value in model.environment[model.manager_name].items()
        ],
        ports=[f"{manager.port}:{manager.port}/tcp"],
    )

    compose.volumes = used_volumes
    return compose
