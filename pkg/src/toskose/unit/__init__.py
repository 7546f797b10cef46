"""Per-container process supervisor ("unit").

Runs as the container's main process, executes per-operation programs
on demand, forwards termination signals, reaps terminated children and
exposes a Supervisor-compatible XML-RPC control API over HTTP.
"""

from .config import UnitConfig, ProgramSpec, load_unit_config
from .supervisor import ProcessState, ProcessInfo, Supervisor

__all__ = [
    "UnitConfig",
    "ProgramSpec",
    "load_unit_config",
    "ProcessState",
    "ProcessInfo",
    "Supervisor",
]
