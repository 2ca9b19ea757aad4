"""Numerical experiments with billiard-type maps of convex planar tables."""

from .errors import BilliardError
from .geometry import (Circle, Ellipse, OrientedLine, PolygonTable, Polyline, Stadium,
                       SupportFourierOval, curve_from_config, random_support_oval)
from .orbit import OrbitRecord, PhaseMap, run_orbit

__version__ = "0.1.0"

__all__ = ["BilliardError", "Circle", "Ellipse", "OrientedLine", "OrbitRecord", "PhaseMap",
           "PolygonTable", "Polyline", "Stadium", "SupportFourierOval", "curve_from_config",
           "random_support_oval", "run_orbit"]
