"""The ``toskose`` command line interface.

    toskose [OPTIONS] CSAR_PATH [CONFIG_PATH]
    toskose harness up|down ARTIFACT_DIR
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .packager.pipeline import PipelineError, run_pipeline
from . import config as toskose_config


def _emit(quiet: bool, stage: str, message: str, level: int = logging.INFO) -> None:
    if quiet:
        print(json.dumps({"stage": stage, "message": message}))
    else:
        logging.log(level, "[%s] %s", stage, message)


@click.command(name="toskose")
@click.argument("csar_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("config_path", type=click.Path(exists=False, dir_okay=False), required=False)
@click.option("-o", "--output-path", "output_path", default="toskose-out",
              show_default=True, help="where to place the output deployment artifacts")
@click.option("-p", "--enable-push", "enable_push", is_flag=True,
              help="push toskosed images to the registry (engine builder only)")
@click.option("--docker-url", default=None,
              help="custom entrypoint for the container engine API; default is a dry run")
@click.option("--repository", default=toskose_config.DEFAULT_REPOSITORY, show_default=True,
              help="default image repository for generated image names")
@click.option("-q", "--quiet", is_flag=True, help="reduce output to JSON-lines diagnostics")
@click.option("--debug", is_flag=True, help="activate debug logging")
def pack(csar_path, config_path, output_path, enable_push, docker_url, repository, quiet, debug):
    """Generate a deployable Compose artifact from a CSAR archive."""
    logging.basicConfig(
        level=logging.DEBUG if debug else (logging.ERROR if quiet else logging.INFO),
        format="%(levelname)s %(message)s",
    )
    try:
        result = run_pipeline(
            csar_path,
            config_path,
            output_dir=output_path,
            push=enable_push,
            docker_url=docker_url,
            default_repository=repository,
        )
    except PipelineError as exc:
        _emit(quiet, exc.stage, str(exc), logging.ERROR)
        if exc.report is not None:
            for violation in exc.report.violations:
                _emit(quiet, exc.stage, f"{violation.code}: {violation.message}", logging.ERROR)
        raise SystemExit(1)
    _emit(quiet, "done", f"compose file written to {result.compose_path}")
    for ref in result.image_refs:
        _emit(quiet, "images", ref)


@click.group(name="harness")
def harness_group():
    """Run a generated artifact locally, without a container engine."""


_STATE_FILENAME = "harness-state.json"


@harness_group.command("up")
@click.argument("artifact_dir", type=click.Path(exists=True, file_okay=False))
def harness_up(artifact_dir):
    """Launch units, manager and stubs from a pipeline output directory."""
    from .harness import launch_from_artifact

    deployment = launch_from_artifact(artifact_dir)
    state = {
        "root": str(deployment.root),
        "pids": {name: proc.pid for name, proc in deployment.processes.items()},
        "alias_table": {a: f"{h}:{p}" for a, (h, p) in deployment.alias_table.items()},
        "manager": deployment.manager_service,
    }
    state_path = Path(artifact_dir) / _STATE_FILENAME
    state_path.write_text(json.dumps(state, indent=2))
    click.echo(f"deployment ready; endpoints: {state['alias_table']}")
    click.echo(f"state recorded in {state_path}")


@harness_group.command("down")
@click.argument("artifact_dir", type=click.Path(exists=True, file_okay=False))
def harness_down(artifact_dir):
    """Tear down a deployment previously brought up from ARTIFACT_DIR."""
    import os
    import shutil
    import signal
    import time

    state_path = Path(artifact_dir) / _STATE_FILENAME
    if not state_path.exists():
        raise click.ClickException(f"no {_STATE_FILENAME} in {artifact_dir}")
    state = json.loads(state_path.read_text())
    for name, pid in state.get("pids", {}).items():
        try:
            os.killpg(pid, signal.SIGTERM)
        except (ProcessLookupError, PermissionError):
            continue
    deadline = time.monotonic() + 15
    for name, pid in state.get("pids", {}).items():
        while time.monotonic() < deadline:
            try:
                os.kill(pid, 0)
            except ProcessLookupError:
                break
            time.sleep(0.1)
        else:
            try:
                os.killpg(pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError):
                pass
    shutil.rmtree(state["root"], ignore_errors=True)
    state_path.unlink()
    click.echo("deployment stopped")


def main(argv: list[str] | None = None) -> int:
    """Dispatch between the packager command and the harness subcommands."""
    args = list(sys.argv[1:] if argv is None else argv)
    if args[:1] == ["harness"]:
        return harness_group.main(args[1:], prog_name="toskose harness", standalone_mode=True)
    return pack.main(args, prog_name="toskose", standalone_mode=True)


if __name__ == "__main__":
    sys.exit(main())
