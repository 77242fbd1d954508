"""HTTP service exposing the experiment drivers (FastAPI + pydantic)."""

from .app import app

__all__ = ["app"]
