"""INI configuration of a unit.

The file carries three fixed sections (HTTP server, supervisor
settings, RPC interface) followed by one ``[program:NAME]`` section
per on-demand program. ``${NAME}`` placeholders are expanded from the
process environment at load time; unresolved placeholders are errors.
"""

from __future__ import annotations

import configparser
import os
import re
import shlex
from dataclasses import dataclass, field


class UnitConfigError(Exception):
    pass


class UnresolvedEnvVar(UnitConfigError):
    pass


class DuplicateProgram(UnitConfigError):
    pass


_PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class HttpSettings:
    host: str = ""
    port: int = 9001
    user: str = ""
    password: str = ""


@dataclass(frozen=True)
class SupervisorSettings:
    log_level: str = "INFO"
    log_path: str = "logs"
    grace_period: float = 10.0


@dataclass(frozen=True)
class ProgramSpec:
    name: str
    command: list[str]
    directory: str | None = None
    environment: dict[str, str] = field(default_factory=dict)
    autostart: bool = False
    autorestart: bool = False
    startsecs: float = 1.0
    exitcodes: frozenset[int] = frozenset({0})
    stdout_log: str | None = None
    stderr_log: str | None = None


@dataclass
class UnitConfig:
    http: HttpSettings = field(default_factory=HttpSettings)
    supervisor: SupervisorSettings = field(default_factory=SupervisorSettings)
    programs: dict[str, ProgramSpec] = field(default_factory=dict)


def _expand(text: str, env: dict[str, str]) -> str:
    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name not in env:
            raise UnresolvedEnvVar(f"environment variable '{name}' is not set")
        return env[name]

    return _PLACEHOLDER.sub(repl, text)


def _parse_bool(value: str, where: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise UnitConfigError(f"{where} must be a boolean, got '{value}'")


def _parse_port(value: str) -> tuple[str, int]:
    value = value.strip()
    host = ""
    if ":" in value:
        host, _, value = value.rpartition(":")
    try:
        port = int(value)
    except ValueError as exc:
        raise UnitConfigError(f"invalid HTTP port '{value}'") from exc
    return host, port


def _parse_environment(value: str, where: str) -> dict[str, str]:
    env: dict[str, str] = {}
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UnitConfigError(f"{where}: environment entry '{item}' is not KEY=value")
        key, _, val = item.partition("=")
        env[key.strip()] = val.strip().strip('"')
    return env


def load_unit_config(document: str, env: dict[str, str] | None = None) -> UnitConfig:
    """Parse an INI unit configuration, expanding ``${NAME}`` placeholders."""
    env = dict(os.environ) if env is None else env
    document = _expand(document, env)

    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(document)
    except configparser.DuplicateSectionError as exc:
        if str(exc.section).startswith("program:"):
            raise DuplicateProgram(f"duplicate section [{exc.section}]") from exc
        raise UnitConfigError(str(exc)) from exc
    except configparser.Error as exc:
        raise UnitConfigError(f"invalid INI document: {exc}") from exc

    http = HttpSettings()
    if parser.has_section("inet_http_server"):
        section = parser["inet_http_server"]
        host, port = _parse_port(section.get("port", str(http.port)))
        http = HttpSettings(
            host=host,
            port=port,
            user=section.get("username", ""),
            password=section.get("password", ""),
        )
    if not http.user or not http.password:
        raise UnitConfigError("HTTP credentials must be non-empty")

    settings = SupervisorSettings()
    if parser.has_section("supervisord"):
        section = parser["supervisord"]
        try:
            grace = float(section.get("grace_period", str(settings.grace_period)))
        except ValueError as exc:
            raise UnitConfigError("supervisord.grace_period must be a number") from exc
        settings = SupervisorSettings(
            log_level=section.get("loglevel", settings.log_level).upper(),
            log_path=section.get("logdir", settings.log_path),
            grace_period=grace,
        )

    programs: dict[str, ProgramSpec] = {}
    for section_name in parser.sections():
        if not section_name.startswith("program:"):
            continue
        name = section_name.split(":", 1)[1]
        section = parser[section_name]
        command_text = section.get("command", "").strip()
        if not command_text:
            raise UnitConfigError(f"program '{name}' has no command")
        startsecs_text = section.get("startsecs", "1")
        try:
            startsecs = float(startsecs_text)
        except ValueError as exc:
            raise UnitConfigError(f"program '{name}': invalid startsecs '{startsecs_text}'") from exc
        if startsecs < 0:
            raise UnitConfigError(f"program '{name}': startsecs must be >= 0")
        exitcodes_text = section.get("exitcodes", "0")
        try:
            exitcodes = frozenset(int(c) for c in exitcodes_text.split(","))
        except ValueError as exc:
            raise UnitConfigError(f"program '{name}': invalid exitcodes '{exitcodes_text}'") from exc
        programs[name] = ProgramSpec(
            name=name,
            command=shlex.split(command_text),
            directory=section.get("directory") or None,
            environment=_parse_environment(section.get("environment", ""), f"program '{name}'"),
            autostart=_parse_bool(section.get("autostart", "false"), f"program '{name}'.autostart"),
            autorestart=_parse_bool(section.get("autorestart", "false"), f"program '{name}'.autorestart"),
            startsecs=startsecs,
            exitcodes=exitcodes,
            stdout_log=section.get("stdout_logfile") or None,
            stderr_log=section.get("stderr_logfile") or None,
        )

    return UnitConfig(http=http, supervisor=settings, programs=programs)
