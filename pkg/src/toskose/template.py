"""Parsing and serialization of TOSCA-style service templates.

The accepted document layout follows the TOSCA simple-profile YAML
shape restricted to the three node kinds this toolchain handles.
Node kinds are detected by type-name suffix; custom types declared
under ``node_types`` inherit the kind of their ``derived_from`` base.
"""

from __future__ import annotations

import yaml

from .model import (
    ArtifactRef,
    LifecycleInterface,
    NodeKind,
    NodeTemplate,
    OperationDef,
    RelationshipInstance,
    RelKind,
    ServiceTemplate,
)


class TemplateError(Exception):
    """Base class for template parsing failures."""


class TemplateSyntaxError(TemplateError):
    pass


class UnknownNodeType(TemplateError):
    pass


class UnresolvedTarget(TemplateError):
    pass


#: Type-name suffix -> node kind, for the base type names.
_KIND_BY_SUFFIX = {
    "Container": NodeKind.CONTAINER,
    "Software": NodeKind.SOFTWARE,
    "Volume": NodeKind.VOLUME,
}

#: Requirement key -> relationship kind.
_REL_BY_REQUIREMENT = {
    "host": RelKind.HOSTED_ON,
    "connection": RelKind.CONNECTS_TO,
    "storage": RelKind.ATTACHES_TO,
    "dependency": RelKind.DEPENDS_ON,
}


def _resolve_kind(type_name: str, derived: dict[str, str]) -> NodeKind:
    """Resolve a node type to its kind, walking derived_from chains."""
    seen: set[str] = set()
    current = type_name
    while True:
        suffix = current.rsplit(".", 1)[-1]
        if suffix in _KIND_BY_SUFFIX:
            return _KIND_BY_SUFFIX[suffix]
        if current in seen or current not in derived:
            raise UnknownNodeType(f"unknown node type '{type_name}'")
        seen.add(current)
        current = derived[current]


def _parse_artifacts(raw: object, node: str) -> list[ArtifactRef]:
    artifacts: list[ArtifactRef] = []
    if raw is None:
        return artifacts
    if not isinstance(raw, dict):
        raise TemplateSyntaxError(f"artifacts of '{node}' must be a mapping")
    for name, value in raw.items():
        if isinstance(value, str):
            path, type_name = value, ""
        elif isinstance(value, dict):
            path = value.get("file", "")
            type_name = str(value.get("type", ""))
        else:
            raise TemplateSyntaxError(f"artifact '{name}' of '{node}' is malformed")
        kind = "image" if type_name.rsplit(".", 1)[-1] == "Image" else "file"
        artifacts.append(ArtifactRef(name=name, path=str(path), kind=kind))
    return artifacts


def _parse_interface(raw: object, node: str) -> LifecycleInterface:
    if raw is None:
        return LifecycleInterface()
    if not isinstance(raw, dict):
        raise TemplateSyntaxError(f"interfaces of '{node}' must be a mapping")
    operations: dict[str, OperationDef] = {}
    shared_inputs: dict[str, object] = {}
    for ops in raw.values():
        if not isinstance(ops, dict):
            raise TemplateSyntaxError(f"interface of '{node}' must be a mapping")
        for op_name, op_def in ops.items():
            if op_name == "inputs":
                shared_inputs.update(op_def or {})
                continue
            if isinstance(op_def, str):
                impl: ArtifactRef | None = ArtifactRef(name=op_name, path=op_def)
                inputs: dict[str, object] = {}
            elif isinstance(op_def, dict):
                impl_path = op_def.get("implementation")
                impl = (
                    ArtifactRef(name=op_name, path=str(impl_path))
                    if impl_path
                    else None
                )
                inputs = dict(op_def.get("inputs") or {})
            elif op_def is None:
                impl, inputs = None, {}
            else:
                raise TemplateSyntaxError(f"operation '{op_name}' of '{node}' is malformed")
            operations[op_name] = OperationDef(implementation=impl, inputs=inputs)
    return LifecycleInterface(operations=operations, inputs=shared_inputs)


def _parse_requirements(raw: object, node: str) -> list[RelationshipInstance]:
    rels: list[RelationshipInstance] = []
    if raw is None:
        return rels
    if not isinstance(raw, list):
        raise TemplateSyntaxError(f"requirements of '{node}' must be a list")
    for entry in raw:
        if not isinstance(entry, dict) or len(entry) != 1:
            raise TemplateSyntaxError(f"requirement of '{node}' must be a single-key mapping")
        (key, value), = entry.items()
        if key not in _REL_BY_REQUIREMENT:
            raise TemplateSyntaxError(f"unknown requirement '{key}' on '{node}'")
        location = None
        if isinstance(value, str):
            target = value
        elif isinstance(value, dict):
            target = value.get("node")
            location = value.get("location")
            if target is None:
                raise TemplateSyntaxError(f"requirement '{key}' of '{node}' names no node")
        else:
            raise TemplateSyntaxError(f"requirement '{key}' of '{node}' is malformed")
        rels.append(
            RelationshipInstance(
                kind=_REL_BY_REQUIREMENT[key],
                source=node,
                target=str(target),
                location=location,
            )
        )
    return rels


def parse_service_template(document: str, name: str = "") -> ServiceTemplate:
    """Parse a YAML service template into the in-memory model.

    Raises :class:`TemplateSyntaxError`, :class:`UnknownNodeType` or
    :class:`UnresolvedTarget` on malformed input; invariant checks that
    produce diagnostics instead live in :func:`toskose.model.validate_topology`.
    """
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise TemplateSyntaxError(f"invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise TemplateSyntaxError("template document must be a mapping")

    derived: dict[str, str] = {}
    for type_name, type_def in (data.get("node_types") or {}).items():
        if isinstance(type_def, dict) and type_def.get("derived_from"):
            derived[type_name] = str(type_def["derived_from"])

    topology = data.get("topology_template") or {}
    if not isinstance(topology, dict):
        raise TemplateSyntaxError("topology_template must be a mapping")
    raw_nodes = topology.get("node_templates") or {}
    if not isinstance(raw_nodes, dict):
        raise TemplateSyntaxError("node_templates must be a mapping")

    template_name = name or str(
        (data.get("metadata") or {}).get("template_name", "application")
    )
    template = ServiceTemplate(
        name=template_name, inputs=dict(topology.get("inputs") or {})
    )

    for node_name, raw in raw_nodes.items():
        if not isinstance(raw, dict) or "type" not in raw:
            raise TemplateSyntaxError(f"node '{node_name}' has no type")
        type_name = str(raw["type"])
        kind = _resolve_kind(type_name, derived)
        template.nodes[node_name] = NodeTemplate(
            name=node_name,
            kind=kind,
            type_name=type_name,
            properties=dict(raw.get("properties") or {}),
            artifacts=_parse_artifacts(raw.get("artifacts"), node_name),
            interface=_parse_interface(raw.get("interfaces"), node_name),
        )
        template.relationships.extend(_parse_requirements(raw.get("requirements"), node_name))

    for rel in template.relationships:
        if rel.target not in template.nodes:
            raise UnresolvedTarget(
                f"relationship {rel.kind.value} from '{rel.source}' targets unknown node '{rel.target}'"
            )

    return template


_REQUIREMENT_BY_REL = {v: k for k, v in _REL_BY_REQUIREMENT.items()}


def serialize_service_template(template: ServiceTemplate) -> str:
    """Serialize back to the accepted YAML layout (parse fixpoint)."""
    node_templates: dict[str, dict] = {}
    derived_types: dict[str, dict] = {}

    for node in template.nodes.values():
        entry: dict = {"type": node.type_name or _default_type_name(node.kind)}
        try:
            _resolve_kind(entry["type"], {})
        except UnknownNodeType:
            # custom type: re-declare it derived from its base kind
            derived_types[entry["type"]] = {
                "derived_from": _default_type_name(node.kind)
            }
        if node.properties:
            entry["properties"] = dict(node.properties)
        if node.artifacts:
            entry["artifacts"] = {
                a.name: (
                    {"file": a.path, "type": "tosker.artifacts.Image"}
                    if a.kind == "image"
                    else a.path
                )
                for a in node.artifacts
            }
        reqs = []
        for rel in template.outgoing(node.name):
            key = _REQUIREMENT_BY_REL[rel.kind]
            if rel.location is not None:
                reqs.append({key: {"node": rel.target, "location": rel.location}})
            else:
                reqs.append({key: rel.target})
        if reqs:
            entry["requirements"] = reqs
        iface = node.interface
        if iface.operations or iface.inputs:
            standard: dict = {}
            if iface.inputs:
                standard["inputs"] = dict(iface.inputs)
            for op_name, op in iface.operations.items():
                op_entry: dict = {}
                if op.implementation is not None:
                    op_entry["implementation"] = op.implementation.path
                if op.inputs:
                    op_entry["inputs"] = dict(op.inputs)
                standard[op_name] = op_entry or None
            entry["interfaces"] = {"Standard": standard}
        node_templates[node.name] = entry

    document: dict = {
        "tosca_definitions_version": "tosca_simple_yaml_1_0",
        "metadata": {"template_name": template.name},
    }
    if derived_types:
        document["node_types"] = derived_types
    topology: dict = {}
    if template.inputs:
        topology["inputs"] = dict(template.inputs)
    topology["node_templates"] = node_templates
    document["topology_template"] = topology
    return yaml.safe_dump(document, sort_keys=False)


def _default_type_name(kind: NodeKind) -> str:
    return {
        NodeKind.CONTAINER: "tosker.nodes.Container",
        NodeKind.SOFTWARE: "tosker.nodes.Software",
        NodeKind.VOLUME: "tosker.nodes.Volume",
    }[kind]
