"""Explainable natural-language audience targeting over an embedded RDF KB."""

from .orchestrator import Engine, EngineConfig, PipelineResult, Request

__version__ = "0.1.0"
__all__ = ["Engine", "EngineConfig", "PipelineResult", "Request", "__version__"]
