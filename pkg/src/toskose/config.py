"""The toskose configuration file: aliases, ports, credentials and
image naming for hosting containers and the manager.

The on-disk format is YAML with two top-level objects, ``nodes`` and
``manager``. Parsing keeps missing fields unset; completion is a
separate, idempotent step that fills in the documented defaults and
never overwrites user-provided values.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, fields, replace

import yaml

from .model import NodeKind, ServiceTemplate, ValidationReport, classify_nodes

log = logging.getLogger(__name__)


class ConfigError(Exception):
    pass


class ConfigSyntaxError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class TypeMismatch(ConfigError):
    pass


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
MODES = ("production", "development")

DEFAULT_UNIT_PORT = 9001
DEFAULT_MANAGER_PORT = 10000
DEFAULT_USER = "admin"
DEFAULT_PASSWORD = "admin"
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_MANAGER_ALIAS = "toskose-manager"
DEFAULT_MODE = "production"
DEFAULT_SECRET_KEY = "secret"
DEFAULT_IMAGE_TAG = "latest"
DEFAULT_REPOSITORY = "toskose"

_DNS_LABEL = re.compile(r"^[a-z0-9]([a-z0-9-]{0,61}[a-z0-9])?$", re.IGNORECASE)


@dataclass(frozen=True)
class NodeConfig:
    alias: str | None = None
    port: int | None = None
    user: str | None = None
    password: str | None = None
    log_level: str | None = None
    image_name: str | None = None
    image_tag: str | None = None
    registry_password: str | None = None


@dataclass(frozen=True)
class ManagerConfig:
    alias: str | None = None
    port: int | None = None
    user: str | None = None
    password: str | None = None
    mode: str | None = None
    secret_key: str | None = None
    image_name: str | None = None
    image_tag: str | None = None
    registry_password: str | None = None


@dataclass
class ToskoseConfig:
    nodes: dict[str, NodeConfig]
    manager: ManagerConfig

    @classmethod
    def empty(cls) -> "ToskoseConfig":
        return cls(nodes={}, manager=ManagerConfig())


_NODE_KEYS = {"alias", "port", "user", "password", "log_level", "docker"}
_MANAGER_KEYS = (_NODE_KEYS - {"log_level"}) | {"mode", "secret_key"}
_DOCKER_KEYS = {"name", "tag", "registry_password"}


def _expect_str(value: object, where: str) -> str | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise TypeMismatch(f"{where} must be a string, got {type(value).__name__}")
    return value


def _expect_port(value: object, where: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeMismatch(f"{where} must be an integer port, got {value!r}")
    return value


def _parse_docker(raw: object, where: str) -> dict[str, str | None]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise TypeMismatch(f"{where}.docker must be a mapping")
    unknown = set(raw) - _DOCKER_KEYS
    if unknown:
        raise UnknownKey(f"unknown keys {sorted(unknown)} in {where}.docker")
    # an empty registry_password value means "no push auth"
    return {
        "image_name": _expect_str(raw.get("name"), f"{where}.docker.name"),
        "image_tag": _expect_str(_stringify(raw.get("tag")), f"{where}.docker.tag"),
        "registry_password": _expect_str(raw.get("registry_password"), f"{where}.docker.registry_password") or None,
    }


def _stringify(value: object) -> object:
    # YAML happily reads tags like 0.1.3 as strings but 2.5 as floats
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return str(value)
    return value


def parse_config(document: str) -> ToskoseConfig:
    """Parse a (possibly partial or empty) toskose configuration file."""
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ConfigSyntaxError(f"invalid YAML: {exc}") from exc
    if data is None:
        return ToskoseConfig.empty()
    if not isinstance(data, dict):
        raise ConfigSyntaxError("configuration document must be a mapping")

    unknown = set(data) - {"nodes", "manager"}
    if unknown:
        raise UnknownKey(f"unknown top-level keys {sorted(unknown)}")

    nodes: dict[str, NodeConfig] = {}
    raw_nodes = data.get("nodes") or {}
    if not isinstance(raw_nodes, dict):
        raise TypeMismatch("'nodes' must be a mapping of container names")
    for name, raw in raw_nodes.items():
        raw = raw or {}
        if not isinstance(raw, dict):
            raise TypeMismatch(f"nodes.{name} must be a mapping")
        extra = set(raw) - _NODE_KEYS
        if extra:
            raise UnknownKey(f"unknown keys {sorted(extra)} in nodes.{name}")
        nodes[name] = NodeConfig(
            alias=_expect_str(raw.get("alias"), f"nodes.{name}.alias"),
            port=_expect_port(raw.get("port"), f"nodes.{name}.port"),
            user=_expect_str(raw.get("user"), f"nodes.{name}.user"),
            password=_expect_str(raw.get("password"), f"nodes.{name}.password"),
            log_level=_expect_str(raw.get("log_level"), f"nodes.{name}.log_level"),
            **_parse_docker(raw.get("docker"), f"nodes.{name}"),
        )

    raw_manager = data.get("manager") or {}
    if not isinstance(raw_manager, dict):
        raise TypeMismatch("'manager' must be a mapping")
    extra = set(raw_manager) - _MANAGER_KEYS
    if extra:
        raise UnknownKey(f"unknown keys {sorted(extra)} in manager")
    manager = ManagerConfig(
        alias=_expect_str(raw_manager.get("alias"), "manager.alias"),
        port=_expect_port(raw_manager.get("port"), "manager.port"),
        user=_expect_str(raw_manager.get("user"), "manager.user"),
        password=_expect_str(raw_manager.get("password"), "manager.password"),
        mode=_expect_str(raw_manager.get("mode"), "manager.mode"),
        secret_key=_expect_str(raw_manager.get("secret_key"), "manager.secret_key"),
        **_parse_docker(raw_manager.get("docker"), "manager"),
    )
    return ToskoseConfig(nodes=nodes, manager=manager)


def validate_config(
    config: ToskoseConfig,
    template: ServiceTemplate,
    require_complete: bool = False,
) -> ValidationReport:
    """Cross-check a configuration against a validated template."""
    report = ValidationReport()
    classification = classify_nodes(template)
    hosting = set(classification.hosting)
    standalone = set(classification.standalone)

    for name, node in config.nodes.items():
        if name in standalone:
            report.add(
                "config-for-standalone",
                name,
                f"'{name}' is a standalone container and takes no unit configuration",
            )
        elif name not in hosting:
            report.add(
                "config-unknown-container",
                name,
                f"'{name}' names no hosting container in the template",
            )
        _check_entry(name, node, report)

    _check_entry("manager", config.manager, report)
    if config.manager.mode is not None and config.manager.mode not in MODES:
        report.add("manager-mode", "manager", f"mode must be one of {MODES}")

    if require_complete:
        for name in sorted(hosting):
            node = config.nodes.get(name)
            if node is None or any(
                getattr(node, f.name) is None
                for f in fields(NodeConfig)
                if f.name != "registry_password"
            ):
                report.add("node-incomplete", name, f"configuration for '{name}' is incomplete")
        if any(
            getattr(config.manager, f.name) is None
            for f in fields(ManagerConfig)
            if f.name != "registry_password"
        ):
            report.add("manager-incomplete", "manager", "manager block is incomplete")
        if config.manager.mode == "production":
            log.warning(
                "credentials are stored in clear text in the configuration file"
            )

    return report


def _check_entry(name: str, entry: NodeConfig | ManagerConfig, report: ValidationReport) -> None:
    if entry.port is not None and not 1 <= entry.port <= 65535:
        report.add("port-range", name, f"port {entry.port} outside [1, 65535]")
    if entry.alias is not None and not _DNS_LABEL.match(entry.alias):
        report.add("alias-format", name, f"alias '{entry.alias}' is not a DNS label")
    if isinstance(entry, NodeConfig) and entry.log_level is not None and entry.log_level not in LOG_LEVELS:
        report.add("log-level", name, f"log_level must be one of {LOG_LEVELS}")
    if entry.image_name is not None and not entry.image_name:
        report.add("image-name", name, "image name must be non-empty")


def complete_config(
    partial: ToskoseConfig,
    template: ServiceTemplate,
    default_repository: str = DEFAULT_REPOSITORY,
) -> ToskoseConfig:
    """Fill every unset field with its default; provided values survive.

    Idempotent: completing a completed configuration is the identity.
    """
    classification = classify_nodes(template)
    app = template.name

    nodes: dict[str, NodeConfig] = {}
    for container in classification.hosting:
        node = partial.nodes.get(container, NodeConfig())
        nodes[container] = replace(
            node,
            alias=node.alias if node.alias is not None else container,
            port=node.port if node.port is not None else DEFAULT_UNIT_PORT,
            user=node.user if node.user is not None else DEFAULT_USER,
            password=node.password if node.password is not None else DEFAULT_PASSWORD,
            log_level=node.log_level if node.log_level is not None else DEFAULT_LOG_LEVEL,
            image_name=node.image_name
            if node.image_name is not None
            else f"{default_repository}/{app}-{container}-toskosed",
            image_tag=node.image_tag if node.image_tag is not None else DEFAULT_IMAGE_TAG,
        )

    manager = partial.manager
    manager = replace(
        manager,
        alias=manager.alias if manager.alias is not None else DEFAULT_MANAGER_ALIAS,
        port=manager.port if manager.port is not None else DEFAULT_MANAGER_PORT,
        user=manager.user if manager.user is not None else DEFAULT_USER,
        password=manager.password if manager.password is not None else DEFAULT_PASSWORD,
        mode=manager.mode if manager.mode is not None else DEFAULT_MODE,
        secret_key=manager.secret_key if manager.secret_key is not None else DEFAULT_SECRET_KEY,
        image_name=manager.image_name
        if manager.image_name is not None
        else f"{default_repository}/{app}-manager-toskosed",
        image_tag=manager.image_tag if manager.image_tag is not None else DEFAULT_IMAGE_TAG,
    )
    return ToskoseConfig(nodes=nodes, manager=manager)


def serialize_config(config: ToskoseConfig) -> str:
    """Write a configuration back out in the documented YAML layout."""

    def docker_block(entry: NodeConfig | ManagerConfig) -> dict:
        block: dict = {}
        if entry.image_name is not None:
            block["name"] = entry.image_name
        if entry.image_tag is not None:
            block["tag"] = entry.image_tag
        block["registry_password"] = entry.registry_password
        return block

    data: dict = {"nodes": {}, "manager": {}}
    for name, node in config.nodes.items():
        entry: dict = {}
        for key in ("alias", "port", "user", "password", "log_level"):
            value = getattr(node, key)
            if value is not None:
                entry[key] = value
        entry["docker"] = docker_block(node)
        data["nodes"][name] = entry
    for key in ("alias", "port", "user", "password", "mode", "secret_key"):
        value = getattr(config.manager, key)
        if value is not None:
            data["manager"][key] = value
    data["manager"]["docker"] = docker_block(config.manager)
    return yaml.safe_dump(data, sort_keys=False)
