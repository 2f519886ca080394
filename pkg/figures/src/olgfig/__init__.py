"""Figure renderer for the OLG debt simulator's result tables."""

__version__ = "0.1.0"

from .render import FigureSpec, RenderResult, cobb_douglas_boundary, render
from .tables import SchemaError, Table, read_table

__all__ = ["FigureSpec", "RenderResult", "SchemaError", "Table",
           "cobb_douglas_boundary", "read_table", "render", "__version__"]
