"""Figure generation for the detection-time laboratory's artifacts."""

__version__ = "0.1.0"

from .render import render_spec, render_artifact_dir, RENDERERS
from .schemas import detect_schema, KNOWN_SCHEMAS, SchemaError

__all__ = ["render_spec", "render_artifact_dir", "RENDERERS",
           "detect_schema", "KNOWN_SCHEMAS", "SchemaError", "__version__"]
