"""Artifact generation workflow: model enrichment, build contexts,
supervisor configurations, image build plans and the Compose document.
"""

from .enrich import EnrichedModel, enrich_model
from .supervisord_conf import generate_supervisor_config
from .contexts import BuildContext, MissingArtifact, generate_contexts
from .builder import DryRunBuilder, EngineBuilder, build_images
from .compose import ComposeModel, generate_compose
from .pipeline import PipelineError, PipelineResult, run_pipeline

__all__ = [
    "EnrichedModel",
    "enrich_model",
    "generate_supervisor_config",
    "BuildContext",
    "MissingArtifact",
    "generate_contexts",
    "DryRunBuilder",
    "EngineBuilder",
    "build_images",
    "ComposeModel",
    "generate_compose",
    "PipelineError",
    "PipelineResult",
    "run_pipeline",
]
