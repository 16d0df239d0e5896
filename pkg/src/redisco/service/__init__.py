"""HTTP service wrapping the analysis library.

The CLI is a thin client of these endpoints; anything the CLI can do is
also reachable over HTTP with the same request and response shapes.
"""

from .app import create_app

__all__ = ["create_app"]
