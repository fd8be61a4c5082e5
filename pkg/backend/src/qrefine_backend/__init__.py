"""Reference backend server for the qrefine wire protocol (v1)."""

from .server import ServerConfig, ServerThread, build_server, serve

__version__ = "0.1.0"

__all__ = ["ServerConfig", "ServerThread", "build_server", "serve"]
