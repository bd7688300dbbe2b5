"""Figures from rough-scl output files.

This package is deliberately decoupled from the solver: it reads only the
stable CSV/JSON formats the ``rough-scl`` CLI emits (snapshot tables,
ledger tables, suite reports) and renders deterministic figures.
"""

from .figures import FigureSpec, RenderResult, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "RenderResult", "SchemaError", "render"]
