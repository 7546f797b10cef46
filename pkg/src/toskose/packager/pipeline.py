"""The end-to-end generation pipeline.

Stages run in order with fail-fast semantics: archive reading, template
parsing and validation, configuration handling (parse, validate,
complete), model enrichment, context generation, image building and
Compose emission. Nothing is written before every validation gate has
passed; scratch directories are removed on completion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .. import config as toskose_config
from ..csar import read_csar
from ..model import ServiceTemplate, ValidationReport, validate_topology
from ..template import parse_service_template
from .builder import DryRunBuilder, EngineBuilder, ImageBuilder, build_images
from .compose import ComposeModel, generate_compose
from .contexts import BuildContext, generate_contexts
from .enrich import EnrichedModel, enrich_model

log = logging.getLogger(__name__)

COMPOSE_FILENAME = "docker-compose.yml"
CONTEXTS_DIRNAME = "contexts"


class PipelineError(Exception):
    def __init__(self, stage: str, message: str, report: ValidationReport | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.report = report


@dataclass
class PipelineResult:
    output_dir: Path
    compose_path: Path
    contexts_dir: Path
    compose: ComposeModel
    model: EnrichedModel
    contexts: list[BuildContext]
    image_refs: list[str] = field(default_factory=list)


def _app_name_from_archive(csar_path: Path) -> str:
    stem = csar_path.stem
    # strip a trailing version suffix like "-v2"
    if "-v" in stem and stem.rsplit("-v", 1)[1].replace(".", "").isdigit():
        stem = stem.rsplit("-v", 1)[0]
    return stem


def run_pipeline(
    csar_path: str | Path,
    config_path: str | Path | None = None,
    output_dir: str | Path = "toskose-out",
    builder: ImageBuilder | None = None,
    push: bool = False,
    docker_url: str | None = None,
    default_repository: str = toskose_config.DEFAULT_REPOSITORY,
) -> PipelineResult:
    """Execute all generation stages and write the deployment artifact."""
    csar_path = Path(csar_path)
    output_dir = Path(output_dir)

    log.info("reading archive %s", csar_path)
    try:
        csar = read_csar(csar_path)
    except Exception as exc:
        raise PipelineError("archive", str(exc)) from exc

    with csar:
        try:
            template = parse_service_template(
                csar.read_entry_definitions(), name=_app_name_from_archive(csar_path)
            )
        except Exception as exc:
            raise PipelineError("template", str(exc)) from exc

        report = validate_topology(template)
        if not report.ok:
            raise PipelineError(
                "topology",
                "; ".join(v.message for v in report.violations),
                report,
            )

        config = _load_config(config_path, template)
        completed = toskose_config.complete_config(
            config, template, default_repository=default_repository
        )
        report = toskose_config.validate_config(completed, template, require_complete=True)
        if not report.ok:
            raise PipelineError(
                "configuration",
                "; ".join(v.message for v in report.violations),
                report,
            )

        model = enrich_model(template, completed)
        try:
            contexts = generate_contexts(model, csar)
        except Exception as exc:
            raise PipelineError("contexts", str(exc)) from exc

        output_dir.mkdir(parents=True, exist_ok=True)
        contexts_dir = output_dir / CONTEXTS_DIRNAME
        if builder is None:
            builder = (
                EngineBuilder(docker_url) if docker_url else DryRunBuilder(contexts_dir)
            )
        if isinstance(builder, DryRunBuilder):
            # dry-run materialises contexts regardless of build outcome
            contexts_dir = builder.output_dir
        try:
            image_refs = build_images(model, contexts, builder, push=push)
        except Exception as exc:
            raise PipelineError("images", str(exc)) from exc
        if not isinstance(builder, DryRunBuilder):
            # keep the contexts on disk alongside the compose document
            for context in contexts:
                context.write_to(contexts_dir)

        compose = generate_compose(model)
        compose_path = output_dir / COMPOSE_FILENAME
        compose_path.write_text(compose.to_yaml())
        log.info("wrote %s and %d contexts", compose_path, len(contexts))

        return PipelineResult(
            output_dir=output_dir,
            compose_path=compose_path,
            contexts_dir=contexts_dir,
            compose=compose,
            model=model,
            contexts=contexts,
            image_refs=image_refs,
        )


def _load_config(config_path: str | Path | None, template: ServiceTemplate):
    if config_path is None:
        config = toskose_config.ToskoseConfig.empty()
    else:
        path = Path(config_path)
        if not path.exists():
            raise PipelineError("configuration", f"no such configuration file: {path}")
        try:
            config = toskose_config.parse_config(path.read_text())
        except toskose_config.ConfigError as exc:
            # an unparseable file aborts the run; defaults apply only to absent input
            raise PipelineError("configuration", str(exc)) from exc
    report = toskose_config.validate_config(config, template)
    if not report.ok:
        raise PipelineError(
            "configuration", "; ".join(v.message for v in report.violations), report
        )
    return config
