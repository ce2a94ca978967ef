"""Static figure rendering for the firm-dynamics model's CSV outputs."""

from .figures import FIGURES, FigureSpec, SchemaError, render

__all__ = ["FIGURES", "FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
