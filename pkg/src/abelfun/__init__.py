"""Verification workbench for the D-module structure of abelian functions."""

__version__ = "0.1.0"
