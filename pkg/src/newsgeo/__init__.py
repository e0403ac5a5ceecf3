"""newsgeo: infer precise accident coordinates from news text.

The package couples fuzzy place-name handling, map-provider sessions,
chunked OCR verification, and a recursive grid search into a four-stage
geolocation pipeline, with a simulation world for offline end-to-end runs.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .geo import EARTH_RADIUS_KM, GeoPoint, GridPlan, grid_points, haversine, offset_point

__all__ = [
    "EARTH_RADIUS_KM",
    "GeoPoint",
    "GridPlan",
    "grid_points",
    "haversine",
    "offset_point",
    "__version__",
]
