"""Model enrichment: merge the parsed template with the completed
configuration, inject the manager container, and fix the per-container
environment and image plan used by every later generation stage.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..config import ToskoseConfig
from ..model import (
    NodeKind,
    NodeTemplate,
    NodeClassification,
    ServiceTemplate,
    classify_nodes,
)

MANAGER_ENV_PORT = "TOSKOSE_MANAGER_PORT"
MANAGER_ENV_MODE = "TOSKOSE_APP_MODE"
MANAGER_ENV_SECRET = "SECRET_KEY"

_NON_ALNUM = re.compile(r"[^A-Za-z0-9]")


def input_env_name(name: str) -> str:
    """Map an operation-input name to its container env var name."""
    return "INPUT_" + _NON_ALNUM.sub("_", name).upper()


@dataclass(frozen=True)
class ImagePlanEntry:
    base_image: str | None
    target_image: str
    toskosed: bool


@dataclass
class EnrichedModel:
    template: ServiceTemplate
    config: ToskoseConfig
    classification: NodeClassification
    manager_node: NodeTemplate
    #: per-container ordered environment, manager included
    environment: dict[str, dict[str, str]] = field(default_factory=dict)
    image_plan: dict[str, ImagePlanEntry] = field(default_factory=dict)

    @property
    def manager_name(self) -> str:
        return self.manager_node.name

    def hosted_components(self, container: str) -> list[str]:
        return self.classification.hosting.get(container, [])


def _base_image(node: NodeTemplate) -> str | None:
    for artifact in node.artifacts:
        if artifact.kind == "image":
            return artifact.path
    return None


def _component_inputs(node: NodeTemplate) -> dict[str, object]:
    """Inputs exported to the container env, in declaration order.

    Interface-level inputs come first, then per-operation inputs, then
    any non-standard node properties (preserved verbatim by the parser).
    """
    inputs: dict[str, object] = {}
    inputs.update(node.interface.inputs)
    for op in node.interface.operations.values():
        for key, value in op.inputs.items():
            inputs.setdefault(key, value)
    for key, value in node.properties.items():
        inputs.setdefault(key, value)
    return inputs


def enrich_model(template: ServiceTemplate, config: ToskoseConfig) -> EnrichedModel:
    """Build the single source of truth for all generation stages.

    Both inputs must already be validated and the config completed.
    """
    classification = classify_nodes(template)
    manager = config.manager
    manager_node = NodeTemplate(
        name=manager.alias or "toskose-manager",
        kind=NodeKind.CONTAINER,
        type_name="tosker.nodes.Container",
    )

    environment: dict[str, dict[str, str]] = {}
    image_plan: dict[str, ImagePlanEntry] = {}

    for container in template.nodes_of_kind(NodeKind.CONTAINER):
        name = container.name
        if name in classification.hosting:
            node_cfg = config.nodes[name]
            env: dict[str, str] = {
                "SUPERVISORD_ALIAS": str(node_cfg.alias),
                "SUPERVISORD_PORT": str(node_cfg.port),
                "SUPERVISORD_USER": str(node_cfg.user),
                "SUPERVISORD_PASSWORD": str(node_cfg.password),
                "SUPERVISORD_LOG_LEVEL": str(node_cfg.log_level),
            }
            for component in classification.hosting[name]:
                for key, value in _component_inputs(template.nodes[component]).items():
                    env[input_env_name(key)] = str(value)
            environment[name] = env
            image_plan[name] = ImagePlanEntry(
                base_image=_base_image(container),
                target_image=f"{node_cfg.image_name}:{node_cfg.image_tag}",
                toskosed=True,
            )
        else:
            environment[name] = {
                key: str(value)
                for key, value in (container.properties.get("env_variables") or {}).items()
            }
            base = _base_image(container)
            image_plan[name] = ImagePlanEntry(
                base_image=base,
                target_image=base or "",
                toskosed=False,
            )

    environment[manager_node.name] = {
        MANAGER_ENV_PORT: str(manager.port),
        MANAGER_ENV_MODE: str(manager.mode),
        MANAGER_ENV_SECRET: str(manager.secret_key),
    }
    image_plan[manager_node.name] = ImagePlanEntry(
        base_image=None,
        target_image=f"{manager.image_name}:{manager.image_tag}",
        toskosed=True,
    )

    return EnrichedModel(
        template=template,
        config=config,
        classification=classification,
        manager_node=manager_node,
        environment=environment,
        image_plan=image_plan,
    )
