"""Reference server for the legiboost generative editing protocol."""

from .adapters import ServerConfig, ServerStartupError, resolve_adapter
from .app import create_app

__all__ = ["ServerConfig", "ServerStartupError", "create_app", "resolve_adapter"]
__version__ = "0.1.0"
