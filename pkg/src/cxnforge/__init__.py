"""Constructicon tooling: conll-c definitions, tree matching, graph management, review."""

__version__ = "0.1.0"
