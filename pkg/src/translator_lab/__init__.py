"""Numerical toolkit for translating solitons of mean curvature flow."""

from . import analysis, errors, flow, geometry, io, solitons

__version__ = "0.1.0"

__all__ = ["analysis", "errors", "flow", "geometry", "io", "solitons", "__version__"]
