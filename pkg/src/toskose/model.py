"""In-memory model of a TOSCA application topology.

Node templates are classified into the three kinds used by the
toolchain (containers, software components, volumes), with four
relationship kinds connecting them. Validation returns typed
diagnostics instead of raising, so callers can report every
violation at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class NodeKind(Enum):
    CONTAINER = "container"
    SOFTWARE = "software"
    VOLUME = "volume"


class RelKind(Enum):
    HOSTED_ON = "hosted_on"
    CONNECTS_TO = "connects_to"
    ATTACHES_TO = "attaches_to"
    DEPENDS_ON = "depends_on"


#: Properties a container node may carry.
CONTAINER_PROPERTIES = frozenset({"ports", "env_variables", "command", "share_data"})

#: The standard lifecycle operation names; extensions are allowed on top.
STANDARD_OPERATIONS = ("create", "configure", "start", "stop", "delete")


@dataclass(frozen=True)
class ArtifactRef:
    """A file or image reference, resolved relative to the archive root."""

    name: str
    path: str
    kind: str = "file"  # "file" | "image"


@dataclass(frozen=True)
class OperationDef:
    implementation: ArtifactRef | None = None
    inputs: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class LifecycleInterface:
    operations: dict[str, OperationDef] = field(default_factory=dict)
    #: Interface-level inputs shared by every operation.
    inputs: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class NodeTemplate:
    name: str
    kind: NodeKind
    type_name: str = ""
    properties: dict[str, object] = field(default_factory=dict)
    artifacts: list[ArtifactRef] = field(default_factory=list)
    interface: LifecycleInterface = field(default_factory=LifecycleInterface)


@dataclass(frozen=True)
class RelationshipInstance:
    kind: RelKind
    source: str
    target: str
    location: str | None = None  # mount path, ATTACHES_TO only


@dataclass
class ServiceTemplate:
    name: str
    nodes: dict[str, NodeTemplate] = field(default_factory=dict)
    relationships: list[RelationshipInstance] = field(default_factory=list)
    inputs: dict[str, object] = field(default_factory=dict)

    def nodes_of_kind(self, kind: NodeKind) -> list[NodeTemplate]:
        return [n for n in self.nodes.values() if n.kind is kind]

    def outgoing(self, node: str, kind: RelKind | None = None) -> list[RelationshipInstance]:
        return [
            r
            for r in self.relationships
            if r.source == node and (kind is None or r.kind is kind)
        ]


@dataclass(frozen=True)
class Violation:
    code: str
    node: str
    message: str

    def as_dict(self) -> dict[str, str]:
        return {"code": self.code, "node": self.node, "message": self.message}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, node: str, message: str) -> None:
        self.violations.append(Violation(code, node, message))

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def as_dicts(self) -> list[dict[str, str]]:
        return [v.as_dict() for v in self.violations]


@dataclass
class NodeClassification:
    """Partition of container nodes into hosting and standalone ones.

    ``hosting`` maps each hosting container to its transitively hosted
    software components, ordered by host-chain depth then name.
    """

    hosting: dict[str, list[str]] = field(default_factory=dict)
    standalone: list[str] = field(default_factory=list)


def validate_topology(template: ServiceTemplate) -> ValidationReport:
    """Check every structural invariant of the topology.

    Violations are data, not faults: the report lists all of them with
    the offending node names.
    """
    report = ValidationReport()
    nodes = template.nodes

    for rel in template.relationships:
        for endpoint in (rel.source, rel.target):
            if endpoint not in nodes:
                report.add(
                    "unresolved-endpoint",
                    endpoint,
                    f"relationship {rel.kind.value} references unknown node '{endpoint}'",
                )
    # endpoint checks below only make sense on resolvable relationships
    resolved = [
        r for r in template.relationships if r.source in nodes and r.target in nodes
    ]

    for name, node in nodes.items():
        if node.kind is NodeKind.CONTAINER:
            extra = set(node.properties) - CONTAINER_PROPERTIES
            if extra:
                report.add(
                    "container-unknown-property",
                    name,
                    f"container '{name}' carries unsupported properties {sorted(extra)}",
                )
        elif node.kind is NodeKind.SOFTWARE:
            hosts = template.outgoing(name, RelKind.HOSTED_ON)
            if len(hosts) == 0:
                report.add(
                    "software-without-host",
                    name,
                    f"software component '{name}' has no hosted-on relationship",
                )
            elif len(hosts) > 1:
                report.add(
                    "software-multiple-hosts",
                    name,
                    f"software component '{name}' has {len(hosts)} hosted-on relationships",
                )
        elif node.kind is NodeKind.VOLUME:
            if template.outgoing(name):
                report.add(
                    "volume-outgoing-relationship",
                    name,
                    f"volume '{name}' must not have outgoing relationships",
                )

    for rel in resolved:
        src, tgt = nodes[rel.source], nodes[rel.target]
        if rel.kind is RelKind.ATTACHES_TO:
            if src.kind is not NodeKind.CONTAINER or tgt.kind is not NodeKind.VOLUME:
                report.add(
                    "invalid-attachment",
                    rel.source,
                    f"attachment must go container -> volume, got {src.kind.value} -> {tgt.kind.value}",
                )
            if not rel.location:
                report.add(
                    "attachment-missing-location",
                    rel.source,
                    f"attachment {rel.source} -> {rel.target} has no mount location",
                )
        elif rel.kind is RelKind.HOSTED_ON:
            if src.kind is not NodeKind.SOFTWARE or tgt.kind is NodeKind.VOLUME:
                report.add(
                    "invalid-host",
                    rel.source,
                    f"hosted-on must go software -> software|container, got "
                    f"{src.kind.value} -> {tgt.kind.value}",
                )
        else:  # CONNECTS_TO / DEPENDS_ON
            if src.kind is NodeKind.VOLUME or tgt.kind is NodeKind.VOLUME:
                report.add(
                    "invalid-relationship-endpoint",
                    rel.source,
                    f"{rel.kind.value} endpoints must be software or container nodes",
                )

    _check_host_chains(template, report)
    return report


def _check_host_chains(template: ServiceTemplate, report: ValidationReport) -> None:
    """Detect hosted-on cycles and chains not terminating at a container."""
    host_of: dict[str, str] = {}
    for rel in template.relationships:
        if rel.kind is RelKind.HOSTED_ON and rel.source in template.nodes and rel.target in template.nodes:
            host_of.setdefault(rel.source, rel.target)

    cyclic: set[str] = set()
    for start in host_of:
        seen = [start]
        current = start
        while current in host_of:
            current = host_of[current]
            if current in seen:
                cyclic.update(seen[seen.index(current):])
                break
            seen.append(current)
    for name in sorted(cyclic):
        report.add("host-cycle", name, f"node '{name}' participates in a hosted-on cycle")

    for name, node in template.nodes.items():
        if node.kind is not NodeKind.SOFTWARE or name in cyclic:
            continue
        current = name
        while current in host_of and host_of[current] not in (None,):
            current = host_of[current]
            if current in cyclic:
                break
        terminal = template.nodes.get(current)
        if (
            current not in cyclic
            and terminal is not None
            and terminal.kind is not NodeKind.CONTAINER
            and current != name  # no-host case already reported
        ):
            report.add(
                "host-chain-not-grounded",
                name,
                f"hosted-on chain from '{name}' ends at non-container '{current}'",
            )


def classify_nodes(template: ServiceTemplate) -> NodeClassification:
    """Partition containers into hosting and standalone ones.

    Requires a clean :func:`validate_topology` report. Hosted components
    are listed per container, ordered by host-chain depth then name.
    """
    host_of = {
        r.source: r.target
        for r in template.relationships
        if r.kind is RelKind.HOSTED_ON
    }

    hosted: dict[str, list[tuple[int, str]]] = {}
    for name, node in template.nodes.items():
        if node.kind is not NodeKind.SOFTWARE:
            continue
        depth = 0
        current = name
        while current in host_of:
            current = host_of[current]
            depth += 1
        container = current
        hosted.setdefault(container, []).append((depth, name))

    classification = NodeClassification()
    for container in template.nodes_of_kind(NodeKind.CONTAINER):
        entries = hosted.get(container.name)
        if entries:
            classification.hosting[container.name] = [
                name for _, name in sorted(entries)
            ]
        else:
            classification.standalone.append(container.name)
    classification.standalone.sort()
    return classification
