"""Image building.

The dry-run builder is the default: it materialises contexts and
dockerfiles under the output directory and returns the planned image
references, so the pipeline never needs a container runtime. The
engine builder is an optional adapter speaking HTTP to a container
engine build/push API.
"""

from __future__ import annotations

import io
import logging
import tarfile
from pathlib import Path
from typing import Protocol

from .contexts import BuildContext
from .enrich import EnrichedModel

log = logging.getLogger(__name__)


class BuilderUnavailable(Exception):
    pass


class BuildFailed(Exception):
    pass


class ImageBuilder(Protocol):
    def build(self, context: BuildContext, tag: str) -> str: ...

    def push(self, tag: str, registry_password: str | None) -> None: ...


class DryRunBuilder:
    """Writes contexts to disk and fabricates image references."""

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)
        self.built: list[str] = []
        self.pushed: list[str] = []

    def build(self, context: BuildContext, tag: str) -> str:
        context.write_to(self.output_dir)
        self.built.append(tag)
        return tag

    def push(self, tag: str, registry_password: str | None) -> None:
        self.pushed.append(tag)
        log.info("dry-run: skipping push of %s", tag)


class EngineBuilder:
    """Adapter for a container-engine HTTP build API."""

    def __init__(self, docker_url: str, timeout: float = 300.0):
        self.docker_url = docker_url.rstrip("/")
        self.timeout = timeout

    def build(self, context: BuildContext, tag: str) -> str:
        import requests

        payload = io.BytesIO()
        with tarfile.open(fileobj=payload, mode="w") as tar:
            for relative, content in context.files.items():
                info = tarfile.TarInfo(relative)
                info.size = len(content)
                tar.addfile(info, io.BytesIO(content))
            dockerfile = context.dockerfile.encode()
            info = tarfile.TarInfo("Dockerfile")
            info.size = len(dockerfile)
            tar.addfile(info, io.BytesIO(dockerfile))
        payload.seek(0)
        try:
            response = requests.post(
                f"{self.docker_url}/build",
                params={"t": tag},
                data=payload.getvalue(),
                headers={"Content-Type": "application/x-tar"},
                timeout=self.timeout,
            )
        except requests.ConnectionError as exc:
            raise BuilderUnavailable(f"engine at {self.docker_url} unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise BuildFailed(f"build of {tag} failed: {response.text}")
        return tag

    def push(self, tag: str, registry_password: str | None) -> None:
        import requests

        name, _, _ = tag.rpartition(":")
        headers = {}
        if registry_password:
            headers["X-Registry-Auth"] = registry_password
        try:
            response = requests.post(
                f"{self.docker_url}/images/{name}/push",
                params={"tag": tag.rpartition(":")[2]},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.ConnectionError as exc:
            raise BuilderUnavailable(f"engine at {self.docker_url} unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise BuildFailed(f"push of {tag} failed: {response.text}")


def build_images(
    model: EnrichedModel,
    contexts: list[BuildContext],
    builder: ImageBuilder,
    push: bool = False,
) -> list[str]:
    """Build one image per context; standalone containers keep their
    original reference and are never built or pushed."""
    by_container = {context.container: context for context in contexts}
    refs: list[str] = []
    for container, plan in model.image_plan.items():
        if not plan.toskosed:
            refs.append(plan.target_image)
            continue
        context = by_container[container]
        refs.append(builder.build(context, plan.target_image))
        if push:
            if container == model.manager_name:
                password = model.config.manager.registry_password
            else:
                password = model.config.nodes[container].registry_password
            builder.push(plan.target_image, password)
    return refs
