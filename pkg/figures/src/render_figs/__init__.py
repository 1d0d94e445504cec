"""Schema-locked plotting for the RNN toolkit's CSV logs."""

from .render import FigureJob, load_gradflow_matrix, normalize_to_max, render
from .schemas import EmptyInputError, FigureError, SchemaError

__all__ = [
    "EmptyInputError",
    "FigureError",
    "FigureJob",
    "SchemaError",
    "load_gradflow_matrix",
    "normalize_to_max",
    "render",
]
