"""Figure pipeline for the delayed-wave simulator's CSV outputs."""

from .figures import (
    KINDS,
    LOG_FLOOR,
    FigureError,
    FigureSpec,
    fit_rate,
    read_table,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "LOG_FLOOR",
    "FigureError",
    "FigureSpec",
    "fit_rate",
    "read_table",
    "render",
    "__version__",
]
