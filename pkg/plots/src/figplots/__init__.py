"""Render the three speed-up figures from rapidpurify figN CSV files.

The CSVs carry columns L, t_numerator, t_denominator, s and (for
Monte-Carlo curves) stderr_s; the detector efficiency of each curve is
read from the standard ``figN_<eta>_<seed>.csv`` file name or supplied
explicitly.  No physics is recomputed here.
"""

from .io import SchemaError, read_curve
from .render import FIGURE_LABELS, LINE_STYLES, build_figure_spec, render

__version__ = "0.1.0"

__all__ = [
    "SchemaError",
    "read_curve",
    "build_figure_spec",
    "render",
    "FIGURE_LABELS",
    "LINE_STYLES",
]
