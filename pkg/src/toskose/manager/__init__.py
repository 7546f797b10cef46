"""Containerisable orchestration service.

Loads the application model (TOSCA template plus completed toskose
configuration), exposes a versioned REST API, and forwards component
lifecycle requests to the right unit over XML-RPC.
"""

from .appmodel import AppModel, load_app_model
from .service import AppManager, OperationResult

__all__ = ["AppModel", "load_app_model", "AppManager", "OperationResult"]
