"""Build-context generation.

One unit context is produced per hosting container (lifecycle
artifacts of every hosted component, the generated unit configuration,
and a multi-stage dockerfile); one manager context carries the TOSCA
template and the completed configuration. Standalone containers keep
their original images and get no context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..config import serialize_config
from ..csar import CsarArchive
from .enrich import EnrichedModel
from .supervisord_conf import artifact_context_path, generate_supervisor_config

UNIT_CONTEXT = "unit-context"
MANAGER_CONTEXT = "manager-context"

SUPERVISOR_CONF = "supervisord.conf"
MANAGER_TEMPLATE_PATH = "model/template.yaml"
MANAGER_CONFIG_PATH = "model/toskose.yml"

UNIT_BASE_IMAGE = "toskose/unit:latest"
MANAGER_BASE_IMAGE = "toskose/manager:latest"


class MissingArtifact(Exception):
    pass


@dataclass
class BuildContext:
    container: str
    kind: str  # UNIT_CONTEXT | MANAGER_CONTEXT
    #: relative path -> file content
    files: dict[str, bytes] = field(default_factory=dict)
    dockerfile: str = ""

    def write_to(self, directory: str | Path) -> Path:
        root = Path(directory) / self.container
        for relative, content in self.files.items():
            target = root / relative
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(content)
        (root / "Dockerfile").parent.mkdir(parents=True, exist_ok=True)
        (root / "Dockerfile").write_text(self.dockerfile)
        return root


def _unit_dockerfile(base_image: str | None) -> str:
    base = base_image or "scratch"
    return "\n".join(
        [
            "# multi-stage build: graft the unit executable onto the base image",
            f"FROM {UNIT_BASE_IMAGE} AS unit",
            f"FROM {base}",
            "COPY --from=unit /toskose/unit /toskose/unit",
            "COPY . /toskose/apps",
            "WORKDIR /toskose/apps",
            'ENTRYPOINT ["/toskose/unit/toskose-unit", "-c", "/toskose/apps/supervisord.conf"]',
            "",
        ]
    )


def _manager_dockerfile() -> str:
    return "\n".join(
        [
            "# multi-stage build: inject the application model into the manager image",
            f"FROM {MANAGER_BASE_IMAGE}",
            "COPY model/ /toskose/manager/model/",
            "",
        ]
    )


def generate_contexts(model: EnrichedModel, csar: CsarArchive) -> list[BuildContext]:
    """Produce the unit contexts and the manager context."""
    contexts: list[BuildContext] = []

    for container, components in model.classification.hosting.items():
        files: dict[str, bytes] = {
            SUPERVISOR_CONF: generate_supervisor_config(model, container).encode()
        }
        for component in components:
            node = model.template.nodes[component]
            for operation in node.interface.operations.values():
                if operation.implementation is None:
                    continue
                files[
                    artifact_context_path(component, operation.implementation.path)
                ] = _read_artifact(csar, operation.implementation.path)
            for artifact in node.artifacts:
                if artifact.kind == "file":
                    files[artifact_context_path(component, artifact.path)] = _read_artifact(
                        csar, artifact.path
                    )
        contexts.append(
            BuildContext(
                container=container,
                kind=UNIT_CONTEXT,
                files=files,
                dockerfile=_unit_dockerfile(model.image_plan[container].base_image),
            )
        )

    contexts.append(
        BuildContext(
            container=model.manager_name,
            kind=MANAGER_CONTEXT,
            files={
                MANAGER_TEMPLATE_PATH: csar.read_entry_definitions().encode(),
                MANAGER_CONFIG_PATH: serialize_config(model.config).encode(),
            },
            dockerfile=_manager_dockerfile(),
        )
    )
    return contexts


def _read_artifact(csar: CsarArchive, path: str) -> bytes:
    resolved = csar.resolve(path)
    if not resolved.is_file():
        raise MissingArtifact(f"artifact '{path}' does not resolve inside the archive")
    return resolved.read_bytes()
