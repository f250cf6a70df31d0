"""Exact desk-scale workbench for matching-based Følner certificates."""

__version__ = "0.2.0"
