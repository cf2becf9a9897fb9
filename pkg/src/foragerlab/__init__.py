"""foragerlab: deterministic workbench for evolving legged virtual foragers."""

__version__ = "0.1.0"
