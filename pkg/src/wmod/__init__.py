"""Truncated realizations and verification tools for degree-1 weight modules of sl(n+1)."""

__version__ = "0.1.0"
